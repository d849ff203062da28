/**
 * Clip capture: pull downscaled grayscale frames from a source at a fixed
 * rate and package them as an LVF-ready frame list.
 *
 * The camera source draws the live video element onto a small canvas; tests
 * substitute a synthetic source. The fps written into the LVF header always
 * matches the rate frames were sampled at.
 */

import { GrayFrame, rgbaToGray } from './lvf.js';

export interface CaptureSettings {
  /** Side length frames are downscaled to before upload. */
  downscaleTo: number;
  /** Sampling rate; also written into the LVF header. */
  fpsTarget: number;
  maxClipSeconds: number;
}

export const DEFAULT_CAPTURE: CaptureSettings = {
  downscaleTo: 64,
  fpsTarget: 25,
  maxClipSeconds: 2,
};

export interface FrameSource {
  start(): Promise<void>;
  /** One downscaled grayscale frame of the current moment. */
  grab(): GrayFrame;
  stop(): void;
}

export interface Clip {
  frames: GrayFrame[];
  fps: number;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

/** Record a fixed-length clip. `wait` is injectable for instant tests. */
export async function captureClip(
  source: FrameSource,
  settings: CaptureSettings,
  wait: (ms: number) => Promise<unknown> = sleep,
): Promise<Clip> {
  const frameCount = Math.round(settings.fpsTarget * settings.maxClipSeconds);
  await source.start();
  try {
    const frames: GrayFrame[] = [];
    for (let i = 0; i < frameCount; i++) {
      if (i > 0) {
        await wait(1000 / settings.fpsTarget);
      }
      frames.push(source.grab());
    }
    return { frames, fps: settings.fpsTarget };
  } finally {
    source.stop();
  }
}

/** Live webcam source: video element mirrored onto a downscale canvas. */
export class CameraSource implements FrameSource {
  private stream: MediaStream | null = null;
  private readonly video = document.createElement('video');
  private readonly canvas = document.createElement('canvas');

  constructor(private readonly side: number) {
    this.canvas.width = side;
    this.canvas.height = side;
  }

  async start(): Promise<void> {
    this.stream = await navigator.mediaDevices.getUserMedia({ video: true });
    this.video.srcObject = this.stream;
    await this.video.play();
  }

  grab(): GrayFrame {
    const context = this.canvas.getContext('2d');
    if (context === null) {
      throw new Error('2d canvas context unavailable');
    }
    context.drawImage(this.video, 0, 0, this.side, this.side);
    const image = context.getImageData(0, 0, this.side, this.side);
    return rgbaToGray(image.data, this.side, this.side);
  }

  stop(): void {
    this.stream?.getTracks().forEach((track) => track.stop());
    this.stream = null;
  }
}
