import * as fs from 'fs'
import * as os from 'os'
import * as path from 'path'
import { PNG } from 'pngjs'
import { describe, expect, it } from 'vitest'
import {
  CHANNEL_MEAN,
  CHANNEL_STD,
  decodeImage,
  preprocess,
  preprocessingDescription,
} from '../src/preprocess'

function solidPng(width: number, height: number, rgb: [number, number, number]): string {
  const png = new PNG({ width, height })
  for (let i = 0; i < width * height; i++) {
    png.data[i * 4] = rgb[0]
    png.data[i * 4 + 1] = rgb[1]
    png.data[i * 4 + 2] = rgb[2]
    png.data[i * 4 + 3] = 255
  }
  const file = path.join(fs.mkdtempSync(path.join(os.tmpdir(), 'feat-img-')), 'img.png')
  fs.writeFileSync(file, PNG.sync.write(png))
  return file
}

describe('preprocess', () => {
  it('produces a crop-sized normalized block', () => {
    const file = solidPng(40, 30, [128, 64, 255])
    const out = preprocess(decodeImage(file), 16, 16)
    expect(out.length).toBe(16 * 16 * 3)
  })

  it('maps a solid color to the exact normalized value everywhere', () => {
    const rgb: [number, number, number] = [51, 102, 204]
    const file = solidPng(24, 24, rgb)
    const out = preprocess(decodeImage(file), 8, 8)
    for (let i = 0; i < out.length; i += 3) {
      for (let c = 0; c < 3; c++) {
        const expected = (rgb[c] / 255 - CHANNEL_MEAN[c]) / CHANNEL_STD[c]
        expect(Math.abs(out[i + c] - expected)).toBeLessThan(1e-5)
      }
    }
  })

  it('is deterministic', () => {
    const file = solidPng(37, 23, [10, 200, 90])
    const img = decodeImage(file)
    const a = preprocess(img, 12, 12)
    const b = preprocess(img, 12, 12)
    expect(Buffer.from(a.buffer).equals(Buffer.from(b.buffer))).toBe(true)
  })

  it('handles images smaller than the crop by upscaling', () => {
    const file = solidPng(5, 4, [0, 0, 0])
    const out = preprocess(decodeImage(file), 16, 16)
    expect(out.length).toBe(16 * 16 * 3)
  })

  it('records the pinned constants', () => {
    const desc = preprocessingDescription(224, 224)
    expect(desc.resizeShorterTo).toBe(256)
    expect(desc.channelMean).toEqual(CHANNEL_MEAN)
    expect(desc.channelStd).toEqual(CHANNEL_STD)
  })

  it('rejects unknown extensions', () => {
    expect(() => decodeImage('/tmp/whatever.bmp')).toThrow(/unsupported/)
  })
})
