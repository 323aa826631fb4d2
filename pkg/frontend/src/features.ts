// Penultimate-layer feature extraction from a tfjs layers model.

import * as tf from '@tensorflow/tfjs'

/**
 * Default tap point: the layer feeding the final Dense classifier, i.e.
 * the second-to-last layer. Architectures with a non-standard head must
 * name the tap layer explicitly.
 */
export function penultimateLayerName(model: tf.LayersModel): string {
  if (model.layers.length < 2) {
    throw new Error('model has no penultimate layer')
  }
  return model.layers[model.layers.length - 2].name
}

export function truncateAt(model: tf.LayersModel, layerName: string): tf.LayersModel {
  const layer = model.getLayer(layerName)
  return tf.model({ inputs: model.inputs, outputs: layer.output as tf.SymbolicTensor })
}

export interface FeatureMatrix {
  data: Float32Array // row-major, rows x dim
  rows: number
  dim: number
}

/** Run the truncated backbone over all inputs in batches. */
export async function extractFeatures(
  model: tf.LayersModel,
  inputs: tf.Tensor,
  options: { layerName?: string; batchSize?: number } = {},
): Promise<FeatureMatrix> {
  const layerName = options.layerName ?? penultimateLayerName(model)
  const batchSize = options.batchSize ?? 64
  const backbone = truncateAt(model, layerName)

  const n = inputs.shape[0]
  const chunks: Float32Array[] = []
  let dim = -1
  for (let start = 0; start < n; start += batchSize) {
    const size = Math.min(batchSize, n - start)
    const flat = tf.tidy(() => {
      const batch = tf.slice(inputs, [start, ...inputs.shape.slice(1).map(() => 0)], [
        size,
        ...inputs.shape.slice(1),
      ])
      const out = backbone.predict(batch, { batchSize: size }) as tf.Tensor
      return tf.reshape(out, [size, -1])
    })
    dim = flat.shape[1] as number
    chunks.push((await flat.data()) as Float32Array)
    flat.dispose()
  }
  const data = new Float32Array(n * dim)
  let offset = 0
  for (const c of chunks) {
    data.set(c, offset)
    offset += c.length
  }
  return { data, rows: n, dim }
}
