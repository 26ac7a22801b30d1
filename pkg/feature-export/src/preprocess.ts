/**
 * Deterministic image preprocessing: decode, bilinear resize so the shorter
 * side is crop * 256/224, center-crop, scale to [0, 1], then normalize per
 * channel. The constants are pinned here and recorded in every export
 * sidecar so feature files are reproducible.
 */

import * as fs from 'fs'
import * as path from 'path'
import * as jpeg from 'jpeg-js'
import { PNG } from 'pngjs'

export const CHANNEL_MEAN = [0.485, 0.456, 0.406]
export const CHANNEL_STD = [0.229, 0.224, 0.225]
export const RESIZE_NUMERATOR = 256
export const RESIZE_DENOMINATOR = 224

export interface DecodedImage {
  width: number
  height: number
  data: Uint8Array // RGBA
}

export function decodeImage(filePath: string): DecodedImage {
  const ext = path.extname(filePath).toLowerCase()
  if (ext !== '.png' && ext !== '.jpg' && ext !== '.jpeg') {
    throw new Error(`unsupported image type: ${filePath}`)
  }
  const bytes = fs.readFileSync(filePath)
  if (ext === '.png') {
    const png = PNG.sync.read(bytes)
    return { width: png.width, height: png.height, data: png.data }
  }
  const img = jpeg.decode(bytes, { useTArray: true, formatAsRGBA: true })
  return { width: img.width, height: img.height, data: img.data }
}

function resizeBilinear(
  img: DecodedImage,
  outWidth: number,
  outHeight: number,
): Float32Array {
  // RGB output in [0, 255]; half-pixel centers, edges clamped.
  const out = new Float32Array(outWidth * outHeight * 3)
  const scaleX = img.width / outWidth
  const scaleY = img.height / outHeight
  for (let y = 0; y < outHeight; y++) {
    const srcY = Math.min(Math.max((y + 0.5) * scaleY - 0.5, 0), img.height - 1)
    const y0 = Math.floor(srcY)
    const y1 = Math.min(y0 + 1, img.height - 1)
    const fy = srcY - y0
    for (let x = 0; x < outWidth; x++) {
      const srcX = Math.min(Math.max((x + 0.5) * scaleX - 0.5, 0), img.width - 1)
      const x0 = Math.floor(srcX)
      const x1 = Math.min(x0 + 1, img.width - 1)
      const fx = srcX - x0
      for (let c = 0; c < 3; c++) {
        const p00 = img.data[(y0 * img.width + x0) * 4 + c]
        const p01 = img.data[(y0 * img.width + x1) * 4 + c]
        const p10 = img.data[(y1 * img.width + x0) * 4 + c]
        const p11 = img.data[(y1 * img.width + x1) * 4 + c]
        const top = p00 + (p01 - p00) * fx
        const bottom = p10 + (p11 - p10) * fx
        out[(y * outWidth + x) * 3 + c] = top + (bottom - top) * fy
      }
    }
  }
  return out
}

/** Preprocess one decoded image to a normalized HWC float block. */
export function preprocess(
  img: DecodedImage,
  cropHeight: number,
  cropWidth: number,
): Float32Array {
  const shorter = Math.min(cropHeight, cropWidth)
  const resizeShorter = Math.round((shorter * RESIZE_NUMERATOR) / RESIZE_DENOMINATOR)
  const scale = resizeShorter / Math.min(img.width, img.height)
  const newWidth = Math.max(Math.round(img.width * scale), cropWidth)
  const newHeight = Math.max(Math.round(img.height * scale), cropHeight)
  const resized = resizeBilinear(img, newWidth, newHeight)

  const left = Math.floor((newWidth - cropWidth) / 2)
  const top = Math.floor((newHeight - cropHeight) / 2)
  const out = new Float32Array(cropHeight * cropWidth * 3)
  for (let y = 0; y < cropHeight; y++) {
    for (let x = 0; x < cropWidth; x++) {
      const src = ((top + y) * newWidth + (left + x)) * 3
      const dst = (y * cropWidth + x) * 3
      for (let c = 0; c < 3; c++) {
        out[dst + c] = (resized[src + c] / 255 - CHANNEL_MEAN[c]) / CHANNEL_STD[c]
      }
    }
  }
  return out
}

export function preprocessingDescription(cropHeight: number, cropWidth: number) {
  const shorter = Math.min(cropHeight, cropWidth)
  return {
    resizeShorterTo: Math.round((shorter * RESIZE_NUMERATOR) / RESIZE_DENOMINATOR),
    interpolation: 'bilinear, half-pixel centers',
    crop: 'center',
    cropHeight,
    cropWidth,
    pixelScale: '1/255',
    channelMean: CHANNEL_MEAN,
    channelStd: CHANNEL_STD,
    channelOrder: 'RGB',
  }
}
