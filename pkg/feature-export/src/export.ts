/**
 * Export pipeline: scan a per-class dataset, run every image through the
 * saved extractor, and write one FVB record per image plus a sidecar with
 * the label map and pinned preprocessing constants.
 *
 * Records are written in dataset-scan order (classes alphabetical, files
 * sorted within each class), so re-running on the same inputs produces a
 * byte-identical file. Unreadable images are skipped with a warning and
 * counted; a missing model is fatal.
 */

import * as fs from 'fs'
import * as tf from '@tensorflow/tfjs'
import { scanDataset, Split } from './dataset'
import { FeatureRecord, writeFvb } from './fvb'
import { loadExtractor } from './modelio'
import { decodeImage, preprocess, preprocessingDescription } from './preprocess'

export interface ExportOptions {
  dataset: string
  split: Split
  model: string
  layer?: string
  out: string
  batchSize?: number
  log?: (message: string) => void
}

export interface ExportResult {
  records: number
  skipped: number
  dim: number
  outPath: string
  sidecarPath: string
  labelMap: Record<string, number>
}

export async function exportFeatures(options: ExportOptions): Promise<ExportResult> {
  const log = options.log ?? ((message: string) => console.error(message))
  const batchSize = options.batchSize ?? 16
  const scan = scanDataset(options.dataset, options.split)
  const extractor = await loadExtractor(options.model, options.layer)
  const { inputHeight, inputWidth, dim } = extractor

  const records: FeatureRecord[] = []
  let skipped = 0

  for (let start = 0; start < scan.images.length; start += batchSize) {
    const batch = scan.images.slice(start, start + batchSize)
    const pixels: Float32Array[] = []
    const labels: number[] = []
    for (const entry of batch) {
      try {
        pixels.push(preprocess(decodeImage(entry.path), inputHeight, inputWidth))
        labels.push(entry.label)
      } catch (e) {
        skipped++
        log(`warning: skipping unreadable image ${entry.path}: ${(e as Error).message}`)
      }
    }
    if (pixels.length === 0) {
      continue
    }
    const block = new Float32Array(pixels.length * inputHeight * inputWidth * 3)
    pixels.forEach((p, i) => block.set(p, i * p.length))
    const features = tf.tidy(() => {
      const input = tf.tensor4d(block, [pixels.length, inputHeight, inputWidth, 3])
      return extractor.model.predict(input) as tf.Tensor2D
    })
    const values = (await features.data()) as Float32Array
    features.dispose()
    labels.forEach((label, i) => {
      records.push({ label, vector: values.slice(i * dim, (i + 1) * dim) })
    })
  }

  fs.writeFileSync(options.out, writeFvb(dim, records))
  const sidecarPath = options.out + '.labels.json'
  const sidecar = {
    model: options.model,
    layer: options.layer ?? null,
    split: options.split,
    dim,
    records: records.length,
    skipped,
    labelMap: scan.labelMap,
    preprocessing: preprocessingDescription(inputHeight, inputWidth),
  }
  fs.writeFileSync(sidecarPath, JSON.stringify(sidecar, null, 2) + '\n')
  if (skipped > 0) {
    log(`warning: skipped ${skipped} unreadable image(s)`)
  }
  return {
    records: records.length,
    skipped,
    dim,
    outPath: options.out,
    sidecarPath,
    labelMap: scan.labelMap,
  }
}
