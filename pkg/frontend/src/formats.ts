// On-disk formats consumed by the Python toolkit: a JSON manifest, a raw
// little-endian float32 feature file, and a 0/1 CSV correctness matrix.

import { writeFileSync, mkdirSync } from 'fs'
import { join } from 'path'

export interface ModelEntry {
  name: string
  mflops_per_image: number
  is_extractor_backbone?: boolean
}

export interface ScenarioManifest {
  name: string
  extractor: { name: string; mflops_per_image: number; feature_dim: number }
  models: ModelEntry[]
  features: { path: string; format: 'f32le'; rows: number; dim: number }
  correctness: { path: string; format: 'csv' }
  splits?: { [split: string]: number[] }
}

/** Row-major float32, little-endian, no header. */
export function encodeF32le(features: Float32Array): Buffer {
  const buf = Buffer.alloc(features.length * 4)
  for (let i = 0; i < features.length; i++) {
    buf.writeFloatLE(features[i], i * 4)
  }
  return buf
}

export function encodeCorrectnessCsv(correctness: Uint8Array, numModels: number): string {
  if (correctness.length % numModels !== 0) {
    throw new Error(`correctness length ${correctness.length} not divisible by ${numModels}`)
  }
  const lines: string[] = []
  for (let row = 0; row < correctness.length / numModels; row++) {
    const cells: number[] = []
    for (let col = 0; col < numModels; col++) {
      const v = correctness[row * numModels + col]
      if (v !== 0 && v !== 1) throw new Error(`non-binary correctness entry ${v}`)
      cells.push(v)
    }
    lines.push(cells.join(','))
  }
  return lines.join('\n') + '\n'
}

export interface ScenarioFiles {
  manifestPath: string
}

export function writeScenarioBundle(
  outDir: string,
  manifest: Omit<ScenarioManifest, 'features' | 'correctness'>,
  features: Float32Array,
  featureDim: number,
  correctness: Uint8Array,
): ScenarioFiles {
  mkdirSync(outDir, { recursive: true })
  const rows = features.length / featureDim
  if (!Number.isInteger(rows)) {
    throw new Error(`feature length ${features.length} not divisible by dim ${featureDim}`)
  }
  if (correctness.length % rows !== 0) {
    throw new Error(`correctness rows do not match feature rows ${rows}`)
  }
  const numModels = correctness.length / rows

  writeFileSync(join(outDir, 'features.f32le'), encodeF32le(features))
  writeFileSync(join(outDir, 'correctness.csv'), encodeCorrectnessCsv(correctness, numModels))

  const full: ScenarioManifest = {
    ...manifest,
    features: { path: 'features.f32le', format: 'f32le', rows, dim: featureDim },
    correctness: { path: 'correctness.csv', format: 'csv' },
  }
  const manifestPath = join(outDir, 'manifest.json')
  writeFileSync(manifestPath, JSON.stringify(full, null, 2))
  return { manifestPath }
}
