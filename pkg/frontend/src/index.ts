export { correctnessMatrix, topOnePredictions } from './correctness.js'
export { extractFeatures, penultimateLayerName, truncateAt } from './features.js'
export { countModelFlops } from './flops.js'
export type { FlopsReport, LayerFlops } from './flops.js'
export { encodeCorrectnessCsv, encodeF32le, writeScenarioBundle } from './formats.js'
export type { ModelEntry, ScenarioManifest } from './formats.js'
export { exportScenario } from './export.js'
export type { CandidateModel, ExportConfig, ExportResult } from './export.js'
