/**
 * Per-class image dataset scanning.
 *
 * Expected layout: one directory per class, images inside. When the dataset
 * root contains a directory named after the requested split (train/test),
 * classes are read from there; otherwise the root itself holds the class
 * directories. Label ids are assigned alphabetically over class directory
 * names (plain code-unit order, locale independent) so they are dense,
 * stable, and identical across splits.
 */

import * as fs from 'fs'
import * as path from 'path'

export type Split = 'train' | 'test'

export interface ImageEntry {
  path: string
  className: string
  label: number
}

export interface DatasetScan {
  root: string
  classes: string[]
  labelMap: Record<string, number>
  images: ImageEntry[]
}

const IMAGE_EXTENSIONS = new Set(['.png', '.jpg', '.jpeg'])

function byCodeUnit(a: string, b: string): number {
  return a < b ? -1 : a > b ? 1 : 0
}

export function scanDataset(datasetDir: string, split: Split): DatasetScan {
  if (!fs.existsSync(datasetDir) || !fs.statSync(datasetDir).isDirectory()) {
    throw new Error(`dataset directory not found: ${datasetDir}`)
  }
  const splitDir = path.join(datasetDir, split)
  const root =
    fs.existsSync(splitDir) && fs.statSync(splitDir).isDirectory()
      ? splitDir
      : datasetDir

  const classes = fs
    .readdirSync(root, { withFileTypes: true })
    .filter(e => e.isDirectory())
    .map(e => e.name)
    .sort(byCodeUnit)
  if (classes.length === 0) {
    throw new Error(`no class directories under ${root}`)
  }

  const labelMap: Record<string, number> = {}
  const images: ImageEntry[] = []
  classes.forEach((className, label) => {
    labelMap[className] = label
    const dir = path.join(root, className)
    const files = fs
      .readdirSync(dir)
      .filter(name => IMAGE_EXTENSIONS.has(path.extname(name).toLowerCase()))
      .sort(byCodeUnit)
    if (files.length === 0) {
      throw new Error(`class directory has no images: ${dir}`)
    }
    for (const name of files) {
      images.push({ path: path.join(dir, name), className, label })
    }
  })

  return { root, classes, labelMap, images }
}
