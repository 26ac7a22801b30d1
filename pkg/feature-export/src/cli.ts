#!/usr/bin/env node
/**
 * feature-export export --dataset DIR --split train|test --out FILE
 *                       --model DIR [--layer NAME] [--batch-size N]
 */

import { parseArgs } from 'util'
import { exportFeatures } from './export'
import { Split } from './dataset'

const USAGE =
  'usage: feature-export export --dataset DIR --split train|test ' +
  '--out FILE --model DIR [--layer NAME] [--batch-size N]'

async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv
  if (command !== 'export') {
    console.error(USAGE)
    return 2
  }
  let parsed
  try {
    parsed = parseArgs({
      args: rest,
      options: {
        dataset: { type: 'string' },
        split: { type: 'string' },
        out: { type: 'string' },
        model: { type: 'string' },
        layer: { type: 'string' },
        'batch-size': { type: 'string' },
      },
    })
  } catch (e) {
    console.error(`error: ${(e as Error).message}`)
    console.error(USAGE)
    return 2
  }
  const values = parsed.values
  if (!values.dataset || !values.split || !values.out || !values.model) {
    console.error(USAGE)
    return 2
  }
  if (values.split !== 'train' && values.split !== 'test') {
    console.error(`error: --split must be train or test, got ${values.split}`)
    return 2
  }

  try {
    const result = await exportFeatures({
      dataset: values.dataset,
      split: values.split as Split,
      model: values.model,
      layer: values.layer,
      out: values.out,
      batchSize: values['batch-size'] ? parseInt(values['batch-size'], 10) : undefined,
    })
    console.log(
      `wrote ${result.records} records (dim ${result.dim}, ` +
        `${result.skipped} skipped) to ${result.outPath}`,
    )
    console.log(`label map: ${result.sidecarPath}`)
    return 0
  } catch (e) {
    console.error(`error: ${(e as Error).message}`)
    return 1
  }
}

main(process.argv.slice(2)).then(code => {
  process.exitCode = code
})
