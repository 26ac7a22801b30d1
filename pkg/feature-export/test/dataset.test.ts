import * as fs from 'fs'
import * as os from 'os'
import * as path from 'path'
import { afterEach, describe, expect, it } from 'vitest'
import { scanDataset } from '../src/dataset'

let tmpDirs: string[] = []

function makeTmpDir(): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'feat-ds-'))
  tmpDirs.push(dir)
  return dir
}

function touch(...parts: string[]) {
  const file = path.join(...parts)
  fs.mkdirSync(path.dirname(file), { recursive: true })
  fs.writeFileSync(file, 'x')
}

afterEach(() => {
  for (const dir of tmpDirs) fs.rmSync(dir, { recursive: true, force: true })
  tmpDirs = []
})

describe('scanDataset', () => {
  it('assigns labels alphabetically over class directory names', () => {
    const root = makeTmpDir()
    touch(root, 'wren', 'b.png')
    touch(root, 'albatross', 'a.png')
    touch(root, 'magpie', 'c.jpg')
    const scan = scanDataset(root, 'train')
    expect(scan.classes).toEqual(['albatross', 'magpie', 'wren'])
    expect(scan.labelMap).toEqual({ albatross: 0, magpie: 1, wren: 2 })
  })

  it('prefers a split directory when present', () => {
    const root = makeTmpDir()
    touch(root, 'train', 'cat', '1.png')
    touch(root, 'test', 'cat', '2.png')
    const train = scanDataset(root, 'train')
    const test = scanDataset(root, 'test')
    expect(train.images[0].path).toContain(path.join('train', 'cat'))
    expect(test.images[0].path).toContain(path.join('test', 'cat'))
  })

  it('sorts images within each class and keeps classes contiguous', () => {
    const root = makeTmpDir()
    touch(root, 'a', 'z.png')
    touch(root, 'a', 'a.png')
    touch(root, 'b', 'm.png')
    const scan = scanDataset(root, 'train')
    expect(scan.images.map(i => path.basename(i.path))).toEqual([
      'a.png',
      'z.png',
      'm.png',
    ])
    expect(scan.images.map(i => i.label)).toEqual([0, 0, 1])
  })

  it('ignores non-image files', () => {
    const root = makeTmpDir()
    touch(root, 'a', 'ok.png')
    touch(root, 'a', 'notes.txt')
    expect(scanDataset(root, 'train').images).toHaveLength(1)
  })

  it('fails on an empty class directory', () => {
    const root = makeTmpDir()
    touch(root, 'a', 'ok.png')
    fs.mkdirSync(path.join(root, 'empty'))
    expect(() => scanDataset(root, 'train')).toThrow(/no images/)
  })

  it('fails on a missing dataset directory', () => {
    expect(() => scanDataset('/nonexistent/nowhere', 'train')).toThrow(/not found/)
  })
})
