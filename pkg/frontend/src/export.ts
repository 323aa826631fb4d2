// Orchestration: one call turns models + a labeled input tensor into a
// complete scenario bundle in the formats the Python toolkit loads.

import * as tf from '@tensorflow/tfjs'

import { correctnessMatrix } from './correctness.js'
import { extractFeatures, penultimateLayerName } from './features.js'
import { countModelFlops } from './flops.js'
import { ModelEntry, ScenarioFiles, writeScenarioBundle } from './formats.js'

export interface CandidateModel {
  name: string
  model: tf.LayersModel
}

export interface ExportConfig {
  name: string
  extractor: CandidateModel
  /** layer to tap for features; default: extractor's penultimate layer */
  extractorLayer?: string
  candidates: CandidateModel[]
  inputs: tf.Tensor
  labels: ArrayLike<number>
  outDir: string
  batchSize?: number
}

export interface ExportResult extends ScenarioFiles {
  featureDim: number
  extractorMflops: number
  candidateMflops: { [name: string]: number }
  approximatedLayers: string[]
}

export async function exportScenario(cfg: ExportConfig): Promise<ExportResult> {
  if (cfg.candidates.length === 0) {
    throw new Error('candidate list is empty')
  }
  const batchSize = cfg.batchSize ?? 64
  const tapLayer = cfg.extractorLayer ?? penultimateLayerName(cfg.extractor.model)

  const features = await extractFeatures(cfg.extractor.model, cfg.inputs, {
    layerName: tapLayer,
    batchSize,
  })
  const correctness = await correctnessMatrix(
    cfg.candidates.map((c) => c.model),
    cfg.inputs,
    cfg.labels,
    batchSize,
  )

  const extractorReport = countModelFlops(cfg.extractor.model, tapLayer)
  const approximatedLayers = [...extractorReport.approximated]
  const candidateMflops: { [name: string]: number } = {}
  const models: ModelEntry[] = cfg.candidates.map((c) => {
    const report = countModelFlops(c.model)
    approximatedLayers.push(...report.approximated)
    candidateMflops[c.name] = report.totalMflops
    return {
      name: c.name,
      mflops_per_image: report.totalMflops,
      ...(c.name === cfg.extractor.name ? { is_extractor_backbone: true } : {}),
    }
  })

  const files = writeScenarioBundle(
    cfg.outDir,
    {
      name: cfg.name,
      extractor: {
        name: cfg.extractor.name,
        mflops_per_image: extractorReport.totalMflops,
        feature_dim: features.dim,
      },
      models,
    },
    features.data,
    features.dim,
    correctness,
  )
  return {
    ...files,
    featureDim: features.dim,
    extractorMflops: extractorReport.totalMflops,
    candidateMflops,
    approximatedLayers,
  }
}
