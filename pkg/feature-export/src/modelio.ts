/**
 * Disk persistence for tfjs layers models without the native node backend.
 *
 * Uses the standard tfjs_layers_model directory layout (model.json with a
 * weightsManifest plus a single weights.bin shard), so models exported by
 * the official converter load here too.
 */

import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'

export function fileSaveHandler(dir: string): tf.io.IOHandler {
  return {
    async save(artifacts: tf.io.ModelArtifacts): Promise<tf.io.SaveResult> {
      fs.mkdirSync(dir, { recursive: true })
      const weightData = artifacts.weightData as ArrayBuffer
      const manifest = [
        {
          paths: ['weights.bin'],
          weights: artifacts.weightSpecs ?? [],
        },
      ]
      const modelJson = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: artifacts.convertedBy ?? null,
        weightsManifest: manifest,
      }
      fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(modelJson))
      fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(weightData))
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON',
        },
      }
    },
  }
}

export function fileLoadHandler(dir: string): tf.io.IOHandler {
  return {
    async load(): Promise<tf.io.ModelArtifacts> {
      const modelJsonPath = path.join(dir, 'model.json')
      if (!fs.existsSync(modelJsonPath)) {
        throw new Error(`model weights not found: ${modelJsonPath}`)
      }
      const modelJson = JSON.parse(fs.readFileSync(modelJsonPath, 'utf8'))
      const weightSpecs: tf.io.WeightsManifestEntry[] = []
      const shards: Buffer[] = []
      for (const group of modelJson.weightsManifest ?? []) {
        weightSpecs.push(...group.weights)
        for (const rel of group.paths) {
          shards.push(fs.readFileSync(path.join(dir, rel)))
        }
      }
      const weightData = Buffer.concat(shards)
      return {
        modelTopology: modelJson.modelTopology,
        format: modelJson.format,
        generatedBy: modelJson.generatedBy,
        weightSpecs,
        weightData: weightData.buffer.slice(
          weightData.byteOffset,
          weightData.byteOffset + weightData.byteLength,
        ),
      }
    },
  }
}

export interface Extractor {
  model: tf.LayersModel
  inputHeight: number
  inputWidth: number
  dim: number
}

/**
 * Load a saved model and truncate it at `layerName` (the named layer's
 * output becomes the feature vector); without a layer name the model's own
 * output is used.
 */
export async function loadExtractor(
  modelDir: string,
  layerName?: string,
): Promise<Extractor> {
  await tf.setBackend('cpu')
  const full = await tf.loadLayersModel(fileLoadHandler(modelDir))
  let model = full
  if (layerName) {
    const layer = full.getLayer(layerName)
    model = tf.model({ inputs: full.inputs, outputs: layer.output })
  }
  const inputShape = model.inputs[0].shape // [batch, height, width, channels]
  const outputShape = model.outputs[0].shape
  if (inputShape.length !== 4 || inputShape[3] !== 3) {
    throw new Error(`expected an RGB image input, got shape [${inputShape}]`)
  }
  if (outputShape.length !== 2) {
    throw new Error(
      `layer ${layerName ?? '(output)'} must produce flat vectors, got shape [${outputShape}]`,
    )
  }
  return {
    model,
    inputHeight: inputShape[1] as number,
    inputWidth: inputShape[2] as number,
    dim: outputShape[1] as number,
  }
}
