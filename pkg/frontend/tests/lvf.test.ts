import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

import { bytesToBase64, encodeLvf, rgbaToGray } from '../src/lvf.js';

const goldenPath = join(
  dirname(fileURLToPath(import.meta.url)),
  '..',
  'golden',
  'golden.lvf',
);

/** Fixed deterministic RGBA test pattern shared with the server-side test. */
function patternFrame(t: number, side: number): Uint8ClampedArray {
  const data = new Uint8ClampedArray(side * side * 4);
  for (let y = 0; y < side; y++) {
    for (let x = 0; x < side; x++) {
      const i = 4 * (y * side + x);
      data[i] = (x * 31 + t * 7) % 256;
      data[i + 1] = (y * 29 + t * 11) % 256;
      data[i + 2] = (x * 17 + y * 13) % 256;
      data[i + 3] = 255;
    }
  }
  return data;
}

describe('LVF encoding', () => {
  it('produces the committed cross-component golden bytes', () => {
    const frames = [0, 1, 2, 3].map((t) => rgbaToGray(patternFrame(t, 8), 8, 8));
    const encoded = encodeLvf(frames, 25);
    const golden = new Uint8Array(readFileSync(goldenPath));
    expect(encoded).toEqual(golden);
  });

  it('writes the header fields little-endian', () => {
    const frame = { width: 3, height: 2, pixels: new Uint8Array(6).fill(9) };
    const bytes = encodeLvf([frame, frame], 25);
    expect([...bytes.subarray(0, 4)]).toEqual([0x4c, 0x56, 0x46, 0x31]);
    const view = new DataView(bytes.buffer);
    expect(view.getUint32(4, true)).toBe(3);
    expect(view.getUint32(8, true)).toBe(2);
    expect(view.getUint32(12, true)).toBe(25);
    expect(view.getUint32(16, true)).toBe(2);
    expect(bytes.length).toBe(20 + 12);
  });

  it('rejects empty and mixed-size clips', () => {
    expect(() => encodeLvf([], 25)).toThrow();
    const a = { width: 2, height: 2, pixels: new Uint8Array(4) };
    const b = { width: 3, height: 2, pixels: new Uint8Array(6) };
    expect(() => encodeLvf([a, b], 25)).toThrow();
  });

  it('base64-encodes byte streams of any length', () => {
    const bytes = new Uint8Array(100000).map((_, i) => i % 251);
    const decoded = Uint8Array.from(atob(bytesToBase64(bytes)), (c) =>
      c.charCodeAt(0),
    );
    expect(decoded).toEqual(bytes);
  });
});
