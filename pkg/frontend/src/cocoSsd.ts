import { Detection } from './blob';
import { FrameImage, decodeRgba } from './images';

export const COCO_SSD_URL_ENV = 'ORBITBENCH_COCO_SSD_URL';

const INSTALL_HINT = [
  'model "coco-ssd" needs optional packages and local weights:',
  '  npm install @tensorflow/tfjs @tensorflow-models/coco-ssd',
  '  download the SSD MobileNet v2 graph model, e.g. from',
  '  https://storage.googleapis.com/tfjs-models/savedmodel/ssd_mobilenet_v2/model.json',
  `  then point ${COCO_SSD_URL_ENV} at the local model.json (file:// URL)`,
].join('\n');

async function loadRuntime(): Promise<{ tf: any; cocoSsd: any }> {
  // Optional dependencies; resolved at run time so the builtin model
  // works without them.
  const tfName = '@tensorflow/tfjs';
  const ssdName = '@tensorflow-models/coco-ssd';
  try {
    return { tf: await import(tfName), cocoSsd: await import(ssdName) };
  } catch {
    throw new Error(INSTALL_HINT);
  }
}

/**
 * Run COCO-pretrained SSD over the frames, keeping detections whose
 * mapped label is wanted.  Model-native [x, y, width, height] output is
 * already corner-based, so only label mapping and the score floor apply
 * here.
 */
export async function detectWithCocoSsd(
  frames: FrameImage[],
  labelMap: Record<string, string>,
): Promise<Map<string, { detection: Detection; label: string }[]>> {
  const { tf, cocoSsd } = await loadRuntime();
  const url = process.env[COCO_SSD_URL_ENV];
  if (!url) {
    throw new Error(`${COCO_SSD_URL_ENV} is not set\n${INSTALL_HINT}`);
  }
  const model = await cocoSsd.load({ modelUrl: url });

  const byFrame = new Map<string, { detection: Detection; label: string }[]>();
  for (const frame of frames) {
    const image = decodeRgba(frame.path);
    const input = tf.tensor3d(
      rgbaToRgb(image.data),
      [image.height, image.width, 3],
      'int32',
    );
    try {
      const raw = await model.detect(input);
      const kept: { detection: Detection; label: string }[] = [];
      for (const d of raw) {
        const label = labelMap[d.class];
        if (!label) {
          continue;
        }
        kept.push({
          detection: { bbox: [d.bbox[0], d.bbox[1], d.bbox[2], d.bbox[3]], score: d.score },
          label,
        });
      }
      byFrame.set(frame.frameId, kept);
    } finally {
      input.dispose();
    }
  }
  return byFrame;
}

function rgbaToRgb(rgba: Uint8Array): Int32Array {
  const n = rgba.length / 4;
  const rgb = new Int32Array(n * 3);
  for (let i = 0; i < n; i++) {
    rgb[i * 3] = rgba[i * 4];
    rgb[i * 3 + 1] = rgba[i * 4 + 1];
    rgb[i * 3 + 2] = rgba[i * 4 + 2];
  }
  return rgb;
}
