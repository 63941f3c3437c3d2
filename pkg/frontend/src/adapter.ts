import { mkdirSync, writeFileSync } from 'fs';
import { dirname } from 'path';

import { detectBlobs } from './blob';
import { detectWithCocoSsd } from './cocoSsd';
import { decodeRgba, listFrameImages } from './images';
import { PredictionRecord, predictionFileSchema } from './schema';

export const SUPPORTED_MODELS = ['blob', 'coco-ssd'] as const;
export type ModelName = (typeof SUPPORTED_MODELS)[number];

export type AdapterConfig = {
  model: ModelName;
  imagesDir: string;
  outPath: string;
  scoreFloor: number; // keep detections with score >= floor; in [0, 1)
  // model class name -> harness label; unmapped classes are dropped
  labelMap?: Record<string, string>;
};

export type AdapterSummary = {
  nImages: number;
  nFailed: number;
  nPredictions: number;
};

const DEFAULT_LABEL_MAP: Record<string, string> = { person: 'person' };

export class AdapterError extends Error {}

/**
 * Detect over every frame image under `imagesDir` and write one
 * prediction file in the harness schema.
 *
 * Unreadable images are warned about and skipped; the run only fails
 * when every image fails.  The output is written once, at the end, and
 * is byte-identical across reruns on the same inputs.
 */
export async function runAdapter(config: AdapterConfig): Promise<AdapterSummary> {
  if (!(SUPPORTED_MODELS as readonly string[]).includes(config.model)) {
    throw new AdapterError(
      `unknown model "${config.model}"; supported: ${SUPPORTED_MODELS.join(', ')}`,
    );
  }
  if (!(config.scoreFloor >= 0 && config.scoreFloor < 1)) {
    throw new AdapterError(`score floor ${config.scoreFloor} outside [0, 1)`);
  }
  const labelMap = config.labelMap ?? DEFAULT_LABEL_MAP;
  const frames = listFrameImages(config.imagesDir);

  const records: PredictionRecord[] = [];
  let nFailed = 0;
  if (config.model === 'blob') {
    const label = labelMap.person ?? 'person';
    for (const frame of frames) {
      try {
        for (const d of detectBlobs(decodeRgba(frame.path))) {
          if (d.score >= config.scoreFloor) {
            records.push({ frame_id: frame.frameId, bbox: d.bbox, score: d.score, label });
          }
        }
      } catch (err) {
        nFailed += 1;
        console.error(`warning: skipping ${frame.path}: ${(err as Error).message}`);
      }
    }
  } else {
    const byFrame = await detectWithCocoSsd(frames, labelMap);
    for (const frame of frames) {
      for (const { detection, label } of byFrame.get(frame.frameId) ?? []) {
        if (detection.score >= config.scoreFloor) {
          records.push({ frame_id: frame.frameId, bbox: detection.bbox, score: detection.score, label });
        }
      }
    }
  }

  if (frames.length > 0 && nFailed === frames.length) {
    throw new AdapterError(`all ${frames.length} images under ${config.imagesDir} failed`);
  }

  predictionFileSchema.parse({ predictions: records }); // self-check before writing
  mkdirSync(dirname(config.outPath), { recursive: true });
  writeFileSync(config.outPath, formatPredictions(records), 'utf-8');
  return { nImages: frames.length, nFailed, nPredictions: records.length };
}

function formatPredictions(records: PredictionRecord[]): string {
  if (records.length === 0) {
    return '{"predictions": []}\n';
  }
  const lines = records.map((r) => '  ' + JSON.stringify(r));
  return '{"predictions": [\n' + lines.join(',\n') + '\n]}\n';
}
