import { readFileSync } from 'fs';
import { join } from 'path';
import { describe, expect, it, vi } from 'vitest';

import { AdapterError, runAdapter } from '../src/adapter';
import { listFrameImages } from '../src/images';
import { predictionFileSchema } from '../src/schema';
import { sandWithRect, tempDir, writeFileAt } from './helpers';

const RECT = { x: 50, y: 30, w: 20, h: 40 };

function frameDir(): string {
  const dir = tempDir('adapter-frames-');
  writeFileAt(join(dir, 't/0/h010.0_r015.0_a000.0.png'), sandWithRect(128, 96, RECT));
  writeFileAt(join(dir, 't/0/h010.0_r015.0_a000.0_id.png'), sandWithRect(16, 16, RECT));
  writeFileAt(join(dir, 't/0/h010.0_r015.0_a000.0_depth.f32'), Buffer.alloc(64));
  return dir;
}

describe('listFrameImages', () => {
  it('keeps only RGB frame files and derives ids from paths', () => {
    const frames = listFrameImages(frameDir());
    expect(frames.map((f) => f.frameId)).toEqual(['t/0/h010.0_r015.0_a000.0']);
  });
});

describe('runAdapter', () => {
  it('writes a valid empty file for an empty directory', async () => {
    const dir = tempDir('adapter-empty-');
    const out = join(dir, 'predictions.json');
    const summary = await runAdapter({
      model: 'blob', imagesDir: dir, outPath: out, scoreFloor: 0,
    });
    expect(summary).toEqual({ nImages: 0, nFailed: 0, nPredictions: 0 });
    expect(readFileSync(out, 'utf-8')).toBe('{"predictions": []}\n');
  });

  it('emits person records for the detected blob', async () => {
    const dir = frameDir();
    const out = join(tempDir('adapter-out-'), 'predictions.json');
    const summary = await runAdapter({
      model: 'blob', imagesDir: dir, outPath: out, scoreFloor: 0,
    });
    expect(summary.nImages).toBe(1);
    expect(summary.nFailed).toBe(0);
    const doc = predictionFileSchema.parse(JSON.parse(readFileSync(out, 'utf-8')));
    expect(doc.predictions).toHaveLength(1);
    expect(doc.predictions[0]).toEqual({
      frame_id: 't/0/h010.0_r015.0_a000.0',
      bbox: [50, 30, 20, 40],
      score: doc.predictions[0].score,
      label: 'person',
    });
  });

  it('boxes a large centered person-proxy at eye level', async () => {
    // smoke check from the adapter contract: one standing-person-sized
    // dark shape, camera at eye level, must yield at least one record
    const dir = tempDir('adapter-proxy-');
    writeFileAt(
      join(dir, 'proxy.png'),
      sandWithRect(512, 512, { x: 236, y: 166, w: 40, h: 180 }),
    );
    const out = join(dir, 'predictions.json');
    await runAdapter({ model: 'blob', imagesDir: dir, outPath: out, scoreFloor: 0 });
    const doc = predictionFileSchema.parse(JSON.parse(readFileSync(out, 'utf-8')));
    expect(doc.predictions.length).toBeGreaterThanOrEqual(1);
    expect(doc.predictions[0].label).toBe('person');
  });

  it('applies the score floor', async () => {
    const dir = frameDir();
    const out = join(tempDir('adapter-floor-'), 'predictions.json');
    const summary = await runAdapter({
      model: 'blob', imagesDir: dir, outPath: out, scoreFloor: 0.99,
    });
    expect(summary.nPredictions).toBe(0);
    expect(readFileSync(out, 'utf-8')).toBe('{"predictions": []}\n');
  });

  it.each([-0.1, 1.0, 1.5, NaN])('rejects score floor %s', async (floor) => {
    await expect(
      runAdapter({ model: 'blob', imagesDir: '.', outPath: 'x.json', scoreFloor: floor }),
    ).rejects.toThrow(AdapterError);
  });

  it('rejects an unsupported model name', async () => {
    await expect(
      runAdapter({
        model: 'yolo-9000' as never, imagesDir: '.', outPath: 'x.json', scoreFloor: 0,
      }),
    ).rejects.toThrow(/unknown model/);
  });

  it('warns and continues past an unreadable image', async () => {
    const dir = frameDir();
    writeFileAt(join(dir, 't/0/h010.0_r015.0_a018.0.png'), Buffer.from('not a png'));
    const out = join(tempDir('adapter-warn-'), 'predictions.json');
    const warn = vi.spyOn(console, 'error').mockImplementation(() => {});
    try {
      const summary = await runAdapter({
        model: 'blob', imagesDir: dir, outPath: out, scoreFloor: 0,
      });
      expect(summary.nImages).toBe(2);
      expect(summary.nFailed).toBe(1);
      expect(summary.nPredictions).toBe(1);
      expect(warn).toHaveBeenCalledOnce();
      expect(String(warn.mock.calls[0][0])).toContain('a018.0.png');
    } finally {
      warn.mockRestore();
    }
  });

  it('fails when every image is unreadable', async () => {
    const dir = tempDir('adapter-allbad-');
    writeFileAt(join(dir, 'a.png'), Buffer.from('junk'));
    writeFileAt(join(dir, 'b.png'), Buffer.from('junk'));
    const warn = vi.spyOn(console, 'error').mockImplementation(() => {});
    try {
      await expect(
        runAdapter({
          model: 'blob', imagesDir: dir,
          outPath: join(dir, 'p.json'), scoreFloor: 0,
        }),
      ).rejects.toThrow(/all 2 images/);
    } finally {
      warn.mockRestore();
    }
  });

  it('writes byte-identical files across reruns', async () => {
    const dir = frameDir();
    const outA = join(tempDir('adapter-rerun-'), 'a.json');
    const outB = join(tempDir('adapter-rerun-'), 'b.json');
    await runAdapter({ model: 'blob', imagesDir: dir, outPath: outA, scoreFloor: 0 });
    await runAdapter({ model: 'blob', imagesDir: dir, outPath: outB, scoreFloor: 0 });
    expect(readFileSync(outA)).toEqual(readFileSync(outB));
  });
});

describe('coco-ssd model path', () => {
  it('explains how to obtain the runtime and weights', async () => {
    const dir = frameDir();
    const out = join(tempDir('adapter-ssd-'), 'predictions.json');
    await expect(
      runAdapter({ model: 'coco-ssd', imagesDir: dir, outPath: out, scoreFloor: 0 }),
    ).rejects.toThrow(/npm install @tensorflow\/tfjs|ORBITBENCH_COCO_SSD_URL/);
  });
});
