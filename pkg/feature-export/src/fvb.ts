/**
 * FVB: little-endian binary file of labeled feature vectors.
 *
 * Layout: "FVB1" magic, u32 version (1), u32 dim, u32 record count,
 * u32 distinct-label count, then per record a u32 label followed by
 * `dim` float32 components. Matches the consumer's reader bit for bit.
 */

export const FVB_MAGIC = 'FVB1'
export const FVB_VERSION = 1
export const FVB_HEADER_BYTES = 20

export interface FeatureRecord {
  label: number
  vector: Float32Array
}

export function writeFvb(dim: number, records: FeatureRecord[]): Buffer {
  if (!Number.isInteger(dim) || dim < 1) {
    throw new Error(`dim must be a positive integer, got ${dim}`)
  }
  for (let i = 0; i < records.length; i++) {
    const { label, vector } = records[i]
    if (!Number.isInteger(label) || label < 0) {
      throw new Error(`record ${i}: label must be a non-negative integer`)
    }
    if (vector.length !== dim) {
      throw new Error(`record ${i}: vector has ${vector.length} components, expected ${dim}`)
    }
    for (let c = 0; c < dim; c++) {
      if (!Number.isFinite(vector[c])) {
        throw new Error(`record ${i}: component ${c} is not finite`)
      }
    }
  }

  const recordBytes = 4 + 4 * dim
  const buf = Buffer.alloc(FVB_HEADER_BYTES + records.length * recordBytes)
  buf.write(FVB_MAGIC, 0, 'ascii')
  buf.writeUInt32LE(FVB_VERSION, 4)
  buf.writeUInt32LE(dim, 8)
  buf.writeUInt32LE(records.length, 12)
  buf.writeUInt32LE(new Set(records.map(r => r.label)).size, 16)

  let pos = FVB_HEADER_BYTES
  for (const { label, vector } of records) {
    buf.writeUInt32LE(label, pos)
    pos += 4
    for (let c = 0; c < dim; c++) {
      buf.writeFloatLE(vector[c], pos)
      pos += 4
    }
  }
  return buf
}

export function readFvb(buf: Buffer): { dim: number; records: FeatureRecord[] } {
  if (buf.length < FVB_HEADER_BYTES) {
    throw new Error(`file is ${buf.length} bytes, header needs ${FVB_HEADER_BYTES}`)
  }
  if (buf.toString('ascii', 0, 4) !== FVB_MAGIC) {
    throw new Error(`bad magic at offset 0, expected ${FVB_MAGIC}`)
  }
  const version = buf.readUInt32LE(4)
  if (version !== FVB_VERSION) {
    throw new Error(`unsupported version ${version}`)
  }
  const dim = buf.readUInt32LE(8)
  const count = buf.readUInt32LE(12)
  const recordBytes = 4 + 4 * dim
  if (buf.length !== FVB_HEADER_BYTES + count * recordBytes) {
    throw new Error(`expected ${FVB_HEADER_BYTES + count * recordBytes} bytes, got ${buf.length}`)
  }
  const records: FeatureRecord[] = []
  let pos = FVB_HEADER_BYTES
  for (let i = 0; i < count; i++) {
    const label = buf.readUInt32LE(pos)
    pos += 4
    const vector = new Float32Array(dim)
    for (let c = 0; c < dim; c++) {
      vector[c] = buf.readFloatLE(pos)
      pos += 4
    }
    records.push({ label, vector })
  }
  return { dim, records }
}
