// Per-sample top-1 correctness for each candidate model.

import * as tf from '@tensorflow/tfjs'

/** Top-1 predictions for every sample, batched. */
export async function topOnePredictions(
  model: tf.LayersModel,
  inputs: tf.Tensor,
  batchSize = 64,
): Promise<Int32Array> {
  const n = inputs.shape[0]
  const out = new Int32Array(n)
  for (let start = 0; start < n; start += batchSize) {
    const size = Math.min(batchSize, n - start)
    const pred = tf.tidy(() => {
      const batch = tf.slice(inputs, [start, ...inputs.shape.slice(1).map(() => 0)], [
        size,
        ...inputs.shape.slice(1),
      ])
      const logits = model.predict(batch, { batchSize: size }) as tf.Tensor
      return tf.argMax(logits, -1)
    })
    out.set((await pred.data()) as Int32Array, start)
    pred.dispose()
  }
  return out
}

/**
 * Column-major assembly of the N x K correctness matrix: entry (n, k) is
 * 1 iff model k's top-1 prediction equals the true label of sample n.
 */
export async function correctnessMatrix(
  models: tf.LayersModel[],
  inputs: tf.Tensor,
  labels: ArrayLike<number>,
  batchSize = 64,
): Promise<Uint8Array> {
  const n = inputs.shape[0]
  if (labels.length !== n) {
    throw new Error(`label count ${labels.length} != sample count ${n}`)
  }
  const matrix = new Uint8Array(n * models.length)
  for (let k = 0; k < models.length; k++) {
    const preds = await topOnePredictions(models[k], inputs, batchSize)
    for (let row = 0; row < n; row++) {
      matrix[row * models.length + k] = preds[row] === labels[row] ? 1 : 0
    }
  }
  return matrix
}
