import { Rgba } from './images';

export type Detection = {
  bbox: [number, number, number, number]; // x_min, y_min, width, height (px)
  score: number;
};

// A pixel belongs to a blob when its color sits this far (euclidean RGB)
// from the per-channel image median, which on orbit imagery is ground.
const COLOR_THRESHOLD = 75;
const MIN_AREA_PX = 12;
// Rejects the sky band and other background-scale regions.
const MAX_AREA_FRACTION = 0.2;
const MAX_DETECTIONS = 5;

function channelMedian(data: Uint8Array, offset: number): number {
  const hist = new Uint32Array(256);
  for (let i = offset; i < data.length; i += 4) {
    hist[data[i]] += 1;
  }
  const half = Math.floor(data.length / 4 / 2);
  let seen = 0;
  for (let v = 0; v < 256; v++) {
    seen += hist[v];
    if (seen > half) {
      return v;
    }
  }
  return 255;
}

function round6(x: number): number {
  return Math.round(x * 1e6) / 1e6;
}

/**
 * Deterministic salient-blob detector, the adapter's built-in model.
 *
 * Pixels far from the median image color are grouped into 4-connected
 * components; each component of plausible size becomes one detection
 * whose score grows with area.  No weights, no randomness: identical
 * input bytes give identical detections.
 */
export function detectBlobs(image: Rgba): Detection[] {
  const { width, height, data } = image;
  const n = width * height;
  const medR = channelMedian(data, 0);
  const medG = channelMedian(data, 1);
  const medB = channelMedian(data, 2);

  const mask = new Uint8Array(n);
  const thresholdSq = COLOR_THRESHOLD * COLOR_THRESHOLD;
  for (let i = 0; i < n; i++) {
    const dr = data[i * 4] - medR;
    const dg = data[i * 4 + 1] - medG;
    const db = data[i * 4 + 2] - medB;
    if (dr * dr + dg * dg + db * db > thresholdSq) {
      mask[i] = 1;
    }
  }

  const maxArea = Math.floor(n * MAX_AREA_FRACTION);
  const queue = new Int32Array(n);
  const detections: Detection[] = [];
  for (let start = 0; start < n; start++) {
    if (!mask[start]) {
      continue;
    }
    mask[start] = 0;
    queue[0] = start;
    let head = 0;
    let tail = 1;
    let area = 0;
    let xMin = width;
    let xMax = -1;
    let yMin = height;
    let yMax = -1;
    while (head < tail) {
      const p = queue[head++];
      const x = p % width;
      const y = (p - x) / width;
      area += 1;
      if (x < xMin) xMin = x;
      if (x > xMax) xMax = x;
      if (y < yMin) yMin = y;
      if (y > yMax) yMax = y;
      if (x > 0 && mask[p - 1]) {
        mask[p - 1] = 0;
        queue[tail++] = p - 1;
      }
      if (x + 1 < width && mask[p + 1]) {
        mask[p + 1] = 0;
        queue[tail++] = p + 1;
      }
      if (y > 0 && mask[p - width]) {
        mask[p - width] = 0;
        queue[tail++] = p - width;
      }
      if (y + 1 < height && mask[p + width]) {
        mask[p + width] = 0;
        queue[tail++] = p + width;
      }
    }
    if (area < MIN_AREA_PX || area > maxArea) {
      continue;
    }
    detections.push({
      bbox: [xMin, yMin, xMax - xMin + 1, yMax - yMin + 1],
      score: round6(Math.min(1, 0.2 + Math.sqrt(area) / 64)),
    });
  }

  detections.sort((a, b) => {
    if (a.score !== b.score) return b.score - a.score;
    if (a.bbox[1] !== b.bbox[1]) return a.bbox[1] - b.bbox[1];
    return a.bbox[0] - b.bbox[0];
  });
  return detections.slice(0, MAX_DETECTIONS);
}
