// Analytic per-layer FLOP counting for tf.LayersModels. One
// multiply-accumulate counts as 2 FLOPs; bias adds and elementwise ops
// count 1 per output element.

import type * as tf from '@tensorflow/tfjs'

export interface LayerFlops {
  name: string
  className: string
  flops: number
}

function elemCount(shape: (number | null)[]): number {
  // batch dimension (null or -1) excluded
  return shape.slice(1).reduce<number>((acc, d) => acc * (d ?? 1), 1)
}

function layerFlops(layer: tf.layers.Layer): number {
  const className = layer.getClassName()
  const cfg = layer.getConfig() as any
  const inShape = layer.batchInputShape ?? (layer.input as any).shape
  const outShape = (layer.output as any).shape as (number | null)[]
  const outElems = elemCount(outShape)

  switch (className) {
    case 'Dense': {
      const inputDim = (inShape[inShape.length - 1] as number) ?? 0
      const units = cfg.units as number
      const bias = cfg.useBias ? units : 0
      return 2 * inputDim * units + bias
    }
    case 'Conv2D': {
      const [kh, kw] = cfg.kernelSize as [number, number]
      const inCh = inShape[inShape.length - 1] as number
      const bias = cfg.useBias ? outElems : 0
      return 2 * outElems * kh * kw * inCh + bias
    }
    case 'DepthwiseConv2D': {
      const [kh, kw] = cfg.kernelSize as [number, number]
      const bias = cfg.useBias ? outElems : 0
      return 2 * outElems * kh * kw + bias
    }
    case 'MaxPooling2D':
    case 'AveragePooling2D': {
      const [ph, pw] = cfg.poolSize as [number, number]
      return outElems * ph * pw
    }
    case 'GlobalAveragePooling2D':
    case 'GlobalMaxPooling2D': {
      return elemCount(inShape as (number | null)[])
    }
    case 'BatchNormalization':
      return 2 * outElems
    case 'Activation':
    case 'ReLU':
    case 'LeakyReLU':
    case 'Softmax':
      return outElems
    case 'Add':
    case 'Concatenate':
      return outElems
    case 'Flatten':
    case 'Reshape':
    case 'Dropout':
    case 'InputLayer':
    case 'ZeroPadding2D':
      return 0
    default:
      // Unknown layer: fall back to one op per output element and let the
      // caller surface a warning.
      return outElems
  }
}

const EXACT_LAYERS = new Set([
  'Dense', 'Conv2D', 'DepthwiseConv2D', 'MaxPooling2D', 'AveragePooling2D',
  'GlobalAveragePooling2D', 'GlobalMaxPooling2D', 'BatchNormalization',
  'Activation', 'ReLU', 'LeakyReLU', 'Softmax', 'Add', 'Concatenate',
  'Flatten', 'Reshape', 'Dropout', 'InputLayer', 'ZeroPadding2D',
])

export interface FlopsReport {
  perLayer: LayerFlops[]
  totalFlops: number
  totalMflops: number
  /** layers counted with the crude one-op-per-element fallback */
  approximated: string[]
}

/**
 * Count per-image inference FLOPs of a layers model, optionally stopping
 * at (and including) a named layer so backbone costs can be measured
 * separately from the classifier head.
 */
export function countModelFlops(model: tf.LayersModel, uptoLayer?: string): FlopsReport {
  const perLayer: LayerFlops[] = []
  const approximated: string[] = []
  for (const layer of model.layers) {
    const flops = layerFlops(layer)
    perLayer.push({ name: layer.name, className: layer.getClassName(), flops })
    if (!EXACT_LAYERS.has(layer.getClassName())) approximated.push(layer.name)
    if (uptoLayer !== undefined && layer.name === uptoLayer) break
  }
  if (uptoLayer !== undefined && !perLayer.some((l) => l.name === uptoLayer)) {
    throw new Error(`layer ${uptoLayer} not found in model`)
  }
  const totalFlops = perLayer.reduce((acc, l) => acc + l.flops, 0)
  return { perLayer, totalFlops, totalMflops: totalFlops / 1e6, approximated }
}
