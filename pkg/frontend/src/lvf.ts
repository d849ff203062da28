/**
 * Client-side encoder for the LVF raw-grayscale video container.
 *
 * Layout: magic "LVF1", then width/height/fps/frameCount as little-endian
 * uint32, then row-major 8-bit pixels frame after frame. The bytes produced
 * here must decode bit-exactly on the server.
 */

const MAGIC = [0x4c, 0x56, 0x46, 0x31]; // "LVF1"

export interface GrayFrame {
  width: number;
  height: number;
  pixels: Uint8Array; // row-major, one byte per pixel
}

/** Integer Rec. 601 luma with round-half-up, matching the server oracle. */
export function lumaFromRgb(r: number, g: number, b: number): number {
  return Math.floor((299 * r + 587 * g + 114 * b + 500) / 1000);
}

/** Convert RGBA canvas pixel data to a grayscale frame. */
export function rgbaToGray(
  data: Uint8ClampedArray,
  width: number,
  height: number,
): GrayFrame {
  const pixels = new Uint8Array(width * height);
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = lumaFromRgb(data[4 * i], data[4 * i + 1], data[4 * i + 2]);
  }
  return { width, height, pixels };
}

/** Encode frames (all the same size) into a single LVF byte stream. */
export function encodeLvf(frames: GrayFrame[], fps: number): Uint8Array {
  if (frames.length === 0) {
    throw new Error('cannot encode an empty clip');
  }
  const { width, height } = frames[0];
  for (const frame of frames) {
    if (frame.width !== width || frame.height !== height) {
      throw new Error('all frames must share one size');
    }
  }
  const out = new Uint8Array(20 + frames.length * width * height);
  out.set(MAGIC, 0);
  const view = new DataView(out.buffer);
  view.setUint32(4, width, true);
  view.setUint32(8, height, true);
  view.setUint32(12, fps, true);
  view.setUint32(16, frames.length, true);
  let offset = 20;
  for (const frame of frames) {
    out.set(frame.pixels, offset);
    offset += frame.pixels.length;
  }
  return out;
}

/** Base64 for upload payloads; chunked to stay inside argument limits. */
export function bytesToBase64(bytes: Uint8Array): string {
  let binary = '';
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}
