/**
 * Optional pretrained-embedding path. The transformer runtime is a soft
 * dependency loaded at call time; when it (or the model weights) is
 * unavailable - the normal situation offline - extraction reports the
 * failure and the caller decides whether to skip or abort.
 */

import { TRANSFORMER_ROSTER } from './config.js';

type FeaturePipeline = (texts: string[], opts: Record<string, unknown>) =>
  Promise<{ data: Float32Array; dims: number[] }>;

export async function embedWithTransformer(
  name: string, texts: string[], pooling: 'mean' | 'cls', maxLength: number,
): Promise<{ data: Float32Array; dim: number }> {
  const entry = TRANSFORMER_ROSTER[name];
  if (!entry) throw new Error(`no roster entry for ${name}`);
  let pipelineFactory: (task: string, model: string) => Promise<FeaturePipeline>;
  try {
    const mod = await import('@xenova/transformers' as string) as {
      pipeline: typeof pipelineFactory;
      env: { allowRemoteModels?: boolean };
    };
    pipelineFactory = mod.pipeline;
  } catch {
    throw new Error(
      `transformer runtime unavailable (install @xenova/transformers to embed ${name})`);
  }
  const extractor = await pipelineFactory('feature-extraction', entry.model);
  const out = new Float32Array(texts.length * entry.dim);
  for (let i = 0; i < texts.length; i++) {
    const result = await extractor([texts[i]], {
      pooling: pooling === 'cls' ? 'cls' : 'mean',
      normalize: false,
      truncation: true,
      max_length: maxLength,
    });
    if (result.dims[result.dims.length - 1] !== entry.dim) {
      throw new Error(
        `${name}: model produced dim ${result.dims[result.dims.length - 1]}, expected ${entry.dim}`);
    }
    out.set(result.data.subarray(0, entry.dim), i * entry.dim);
  }
  return { data: out, dim: entry.dim };
}
