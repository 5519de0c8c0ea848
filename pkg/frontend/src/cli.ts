#!/usr/bin/env node
/**
 * dres-extract: turn a raw text dataset (id,text,label CSV) into DMAT
 * feature views plus engine-format labels and a manifest.
 *
 * Usage: dres-extract extract --config extract.toml [--strict]
 * Exit codes: 0 success, 1 usage error, 2 data/config error.
 */

import { loadConfig } from './config.js';
import { runExtraction } from './extract.js';

function usage(): void {
  process.stderr.write(
    'usage: dres-extract extract --config <extract.toml|json> [--strict]\n');
}

export async function main(argv: string[]): Promise<number> {
  if (argv[0] !== 'extract') {
    usage();
    return 1;
  }
  let configPath: string | undefined;
  let strict: boolean | undefined;
  for (let i = 1; i < argv.length; i++) {
    if (argv[i] === '--config') {
      configPath = argv[++i];
    } else if (argv[i] === '--strict') {
      strict = true;
    } else {
      process.stderr.write(`unknown argument ${argv[i]}\n`);
      usage();
      return 1;
    }
  }
  if (!configPath) {
    usage();
    return 1;
  }
  try {
    const config = loadConfig(configPath);
    if (strict !== undefined) config.strict = strict;
    const result = await runExtraction(config);
    for (const warning of result.warnings) {
      process.stderr.write(`warning: ${warning}\n`);
    }
    for (const view of result.views) {
      process.stdout.write(
        `wrote ${view.file} (${view.rows} x ${view.dim}, sha256 ${view.sha256.slice(0, 12)}...)\n`);
    }
    process.stdout.write(`wrote ${result.labelsFile}\n`);
    process.stdout.write(`wrote ${result.manifestFile}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`dres-extract: ${err instanceof Error ? err.message : err}\n`);
    return 2;
  }
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(
  process.argv[1].split('/').pop() ?? '');
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
