import { mkdtempSync, writeFileSync } from 'fs';
import { tmpdir } from 'os';
import { dirname, join } from 'path';
import { mkdirSync } from 'fs';
import { PNG } from 'pngjs';

export const SAND: [number, number, number] = [183, 160, 117];
export const DARK: [number, number, number] = [40, 55, 70];

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

export function encodePng(
  width: number,
  height: number,
  paint: (x: number, y: number) => [number, number, number],
): Buffer {
  const png = new PNG({ width, height });
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = paint(x, y);
      const i = (y * width + x) * 4;
      png.data[i] = r;
      png.data[i + 1] = g;
      png.data[i + 2] = b;
      png.data[i + 3] = 255;
    }
  }
  return PNG.sync.write(png);
}

/** Sand background with one dark axis-aligned rectangle. */
export function sandWithRect(
  width: number,
  height: number,
  rect: { x: number; y: number; w: number; h: number },
): Buffer {
  return encodePng(width, height, (x, y) =>
    x >= rect.x && x < rect.x + rect.w && y >= rect.y && y < rect.y + rect.h ? DARK : SAND,
  );
}

export function writeFileAt(path: string, contents: Buffer | string): void {
  mkdirSync(dirname(path), { recursive: true });
  writeFileSync(path, contents);
}
