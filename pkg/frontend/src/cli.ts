#!/usr/bin/env node
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { AdapterError, ModelName, SUPPORTED_MODELS, runAdapter } from './adapter';

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .scriptName('orbitbench-adapter')
    .usage('$0 --images <dir> --out <path> [--model <name>] [--score-floor <f>]')
    .option('model', {
      choices: SUPPORTED_MODELS as unknown as ModelName[],
      default: 'blob' as ModelName,
      describe: 'detector to run',
    })
    .option('images', {
      type: 'string',
      demandOption: true,
      describe: 'generated frames directory',
    })
    .option('out', {
      type: 'string',
      demandOption: true,
      describe: 'prediction JSON output path',
    })
    .option('score-floor', {
      type: 'number',
      default: 0,
      describe: 'drop detections scoring below this',
    })
    .strict()
    .parse();

  const summary = await runAdapter({
    model: argv.model,
    imagesDir: argv.images,
    outPath: argv.out,
    scoreFloor: argv['score-floor'],
  });
  console.log(
    `${summary.nPredictions} predictions from ${summary.nImages} images` +
      (summary.nFailed ? ` (${summary.nFailed} failed)` : ''),
  );
}

main().catch((err: Error) => {
  console.error(err instanceof AdapterError ? `error: ${err.message}` : err);
  process.exit(1);
});
