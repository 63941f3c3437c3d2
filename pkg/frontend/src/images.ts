import { readFileSync, readdirSync } from 'fs';
import { join, sep } from 'path';
import { PNG } from 'pngjs';

export type FrameImage = {
  frameId: string;
  path: string;
};

export type Rgba = {
  width: number;
  height: number;
  data: Uint8Array; // RGBA, row-major
};

/**
 * Frame images under a generated frames directory, sorted by frame id.
 *
 * The renderer writes `<frame_id>.png` next to `<frame_id>_id.png` and
 * optionally `<frame_id>_depth.f32`; only the RGB file counts as a frame,
 * and the frame id is the relative path with the extension dropped.
 */
export function listFrameImages(imagesDir: string): FrameImage[] {
  const entries = readdirSync(imagesDir, { recursive: true }) as string[];
  const frames: FrameImage[] = [];
  for (const entry of entries) {
    if (!entry.endsWith('.png') || entry.endsWith('_id.png')) {
      continue;
    }
    const frameId = entry.split(sep).join('/').slice(0, -'.png'.length);
    frames.push({ frameId, path: join(imagesDir, entry) });
  }
  frames.sort((a, b) => (a.frameId < b.frameId ? -1 : a.frameId > b.frameId ? 1 : 0));
  return frames;
}

export function decodeRgba(path: string): Rgba {
  const png = PNG.sync.read(readFileSync(path));
  return { width: png.width, height: png.height, data: png.data };
}
