import * as tf from '@tensorflow/tfjs'
import { describe, expect, it } from 'vitest'

import { countModelFlops } from '../src/flops.js'

function denseModel(): tf.LayersModel {
  const model = tf.sequential()
  model.add(tf.layers.dense({ inputShape: [4], units: 8 }))
  model.add(tf.layers.dense({ units: 3 }))
  return model
}

function convModel(): tf.LayersModel {
  const model = tf.sequential()
  model.add(
    tf.layers.conv2d({ inputShape: [8, 8, 1], filters: 4, kernelSize: 3, padding: 'same' }),
  )
  model.add(tf.layers.maxPooling2d({ poolSize: 2 }))
  model.add(tf.layers.flatten())
  model.add(tf.layers.dense({ units: 5 }))
  return model
}

describe('countModelFlops', () => {
  it('matches the hand count for a dense stack', () => {
    // dense1: 2*4*8 + 8 = 72, dense2: 2*8*3 + 3 = 51
    const report = countModelFlops(denseModel())
    expect(report.totalFlops).toBe(72 + 51)
    expect(report.approximated).toEqual([])
  })

  it('matches the hand count for a small conv net', () => {
    // conv: 2*(8*8*4)*(3*3*1) + 8*8*4 = 4864
    // pool: (4*4*4)*(2*2) = 256, flatten: 0, dense: 2*64*5 + 5 = 645
    const report = countModelFlops(convModel())
    expect(report.totalFlops).toBe(4864 + 256 + 0 + 645)
  })

  it('stops at a named layer for backbone costing', () => {
    const model = convModel()
    const convName = model.layers[0].name
    const report = countModelFlops(model, convName)
    expect(report.totalFlops).toBe(4864)
  })

  it('rejects an unknown tap layer', () => {
    expect(() => countModelFlops(denseModel(), 'nope')).toThrow(/not found/)
  })

  it('is deterministic across calls', () => {
    const model = convModel()
    expect(countModelFlops(model).totalFlops).toBe(countModelFlops(model).totalFlops)
  })

  it('scales with model size the way layer arithmetic predicts', () => {
    const small = tf.sequential()
    small.add(tf.layers.dense({ inputShape: [10], units: 10, useBias: false }))
    const large = tf.sequential()
    large.add(tf.layers.dense({ inputShape: [10], units: 40, useBias: false }))
    const ratio = countModelFlops(large).totalFlops / countModelFlops(small).totalFlops
    expect(ratio).toBeCloseTo(4.0, 10)
  })
})
