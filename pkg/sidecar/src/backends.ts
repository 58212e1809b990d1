// Op implementations behind the protocol. The builtin set is model-free
// and deterministic: restore is an outlier-median repair, clip_sim is an
// SSIM-style score over 16x16 thumbnails, niqe is a high-frequency noise
// proxy (higher = worse). Real models plug in via --model, see README.

import { pathToFileURL } from 'node:url';
import { resolve } from 'node:path';
import type { GrayImage } from './png.js';

export class BackendError extends Error {}

export interface Backends {
  restore(img: GrayImage, params: Record<string, unknown>): GrayImage | Promise<GrayImage>;
  clipSim(a: GrayImage, b: GrayImage | null, params: Record<string, unknown>): number | Promise<number>;
  niqe(img: GrayImage, params: Record<string, unknown>): number | Promise<number>;
}

function clampedIndex(v: number, limit: number): number {
  return v < 0 ? 0 : v >= limit ? limit - 1 : v;
}

function neighborhood3x3(img: GrayImage, x: number, y: number, out: number[]): void {
  let k = 0;
  for (let dy = -1; dy <= 1; dy++) {
    const yy = clampedIndex(y + dy, img.height);
    for (let dx = -1; dx <= 1; dx++) {
      const xx = clampedIndex(x + dx, img.width);
      out[k++] = img.pixels[yy * img.width + xx];
    }
  }
}

export function median3x3(img: GrayImage): GrayImage {
  const out = new Uint8Array(img.width * img.height);
  const window: number[] = new Array(9);
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      neighborhood3x3(img, x, y, window);
      window.sort((a, b) => a - b);
      out[y * img.width + x] = window[4];
    }
  }
  return { width: img.width, height: img.height, pixels: out };
}

export function boxBlur3x3(img: GrayImage): GrayImage {
  const out = new Uint8Array(img.width * img.height);
  const window: number[] = new Array(9);
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      neighborhood3x3(img, x, y, window);
      let sum = 0;
      for (const v of window) sum += v;
      out[y * img.width + x] = Math.round(sum / 9);
    }
  }
  return { width: img.width, height: img.height, pixels: out };
}

/** Replaces only pixels that deviate from their 3x3 median by more than
 * delta; everything else passes through untouched. */
export function restoreOutliers(img: GrayImage, delta: number): GrayImage {
  const med = median3x3(img);
  const out = img.pixels.slice();
  for (let i = 0; i < out.length; i++) {
    if (Math.abs(out[i] - med.pixels[i]) > delta) out[i] = med.pixels[i];
  }
  return { width: img.width, height: img.height, pixels: out };
}

export function bilinearResize(img: GrayImage, width: number, height: number): GrayImage {
  if (width <= 0 || height <= 0) throw new BackendError('target size must be positive');
  if (width === img.width && height === img.height) {
    return { width, height, pixels: img.pixels.slice() };
  }
  const out = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    const sy = ((y + 0.5) * img.height) / height - 0.5;
    const y0 = clampedIndex(Math.floor(sy), img.height);
    const y1 = clampedIndex(y0 + 1, img.height);
    const fy = Math.min(1, Math.max(0, sy - y0));
    for (let x = 0; x < width; x++) {
      const sx = ((x + 0.5) * img.width) / width - 0.5;
      const x0 = clampedIndex(Math.floor(sx), img.width);
      const x1 = clampedIndex(x0 + 1, img.width);
      const fx = Math.min(1, Math.max(0, sx - x0));
      const top = img.pixels[y0 * img.width + x0] * (1 - fx) + img.pixels[y0 * img.width + x1] * fx;
      const bot = img.pixels[y1 * img.width + x0] * (1 - fx) + img.pixels[y1 * img.width + x1] * fx;
      out[y * width + x] = Math.round(top * (1 - fy) + bot * fy);
    }
  }
  return { width, height, pixels: out };
}

/** Box-mean thumbnail used as the stand-in embedding for clip_sim. */
export function thumbnail(img: GrayImage, size = 16): Float64Array {
  const feat = new Float64Array(size * size);
  for (let i = 0; i < size; i++) {
    let r0 = Math.floor((i * img.height) / size);
    let r1 = Math.floor(((i + 1) * img.height) / size);
    r0 = clampedIndex(r0, img.height);
    r1 = Math.max(r0 + 1, Math.min(r1, img.height));
    for (let j = 0; j < size; j++) {
      let c0 = Math.floor((j * img.width) / size);
      let c1 = Math.floor(((j + 1) * img.width) / size);
      c0 = clampedIndex(c0, img.width);
      c1 = Math.max(c0 + 1, Math.min(c1, img.width));
      let sum = 0;
      for (let y = r0; y < r1; y++) {
        for (let x = c0; x < c1; x++) sum += img.pixels[y * img.width + x];
      }
      feat[i * size + j] = sum / ((r1 - r0) * (c1 - c0));
    }
  }
  return feat;
}

/** Global SSIM over two equal-length feature vectors; exactly 1 for
 * identical inputs, below 1 otherwise, with the usual 8-bit constants. */
export function structuralSimilarity(a: Float64Array, b: Float64Array): number {
  if (a.length !== b.length) throw new BackendError('feature lengths differ');
  const n = a.length;
  let ma = 0;
  let mb = 0;
  for (let i = 0; i < n; i++) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  let va = 0;
  let vb = 0;
  let cov = 0;
  for (let i = 0; i < n; i++) {
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
    cov += (a[i] - ma) * (b[i] - mb);
  }
  va /= n;
  vb /= n;
  cov /= n;
  const c1 = (0.01 * 255) ** 2;
  const c2 = (0.03 * 255) ** 2;
  return ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

/** Mean absolute deviation from a 3x3 box blur, in gray levels. Noise
 * pushes the score up, so higher = worse naturalness. */
export function highFrequencyEnergy(img: GrayImage): number {
  const blur = boxBlur3x3(img);
  let sum = 0;
  for (let i = 0; i < img.pixels.length; i++) {
    sum += Math.abs(img.pixels[i] - blur.pixels[i]);
  }
  return sum / img.pixels.length;
}

function numberParam(params: Record<string, unknown>, key: string, fallback: number): number {
  const v = params[key];
  return typeof v === 'number' && Number.isFinite(v) ? v : fallback;
}

export const builtinBackends: Backends = {
  restore(img, params) {
    const delta = numberParam(params, 'delta', 32);
    const width = numberParam(params, 'width', img.width);
    const height = numberParam(params, 'height', img.height);
    let out = restoreOutliers(img, delta);
    if (width !== out.width || height !== out.height) {
      out = bilinearResize(out, width, height);
    }
    return out;
  },
  clipSim(a, b) {
    if (b === null) {
      throw new BackendError('text variant requires a model backend (--model); send image_b');
    }
    return structuralSimilarity(thumbnail(a), thumbnail(b));
  },
  niqe(img) {
    return highFrequencyEnergy(img);
  },
};

function echoOnlyRefusal(op: string): never {
  throw new BackendError(`op ${op} is disabled in echo-only mode`);
}

export const echoOnlyBackends: Backends = {
  restore() {
    echoOnlyRefusal('restore');
  },
  clipSim() {
    echoOnlyRefusal('clip_sim');
  },
  niqe() {
    echoOnlyRefusal('niqe');
  },
};

/** Chains every call through one promise so a non-reentrant model never
 * sees overlapping requests. */
export function serialized(backends: Backends): Backends {
  let gate: Promise<unknown> = Promise.resolve();
  const enqueue = <T>(run: () => T | Promise<T>): Promise<T> => {
    const turn = gate.then(run, run);
    gate = turn.catch(() => undefined);
    return turn;
  };
  return {
    restore: (img, params) => enqueue(() => backends.restore(img, params)),
    clipSim: (a, b, params) => enqueue(() => backends.clipSim(a, b, params)),
    niqe: (img, params) => enqueue(() => backends.niqe(img, params)),
  };
}

/** Loads a model module and overlays its exports on the builtins. The
 * module may export restore/clipSim/niqe and `reentrant: true` to opt
 * out of call serialization. */
export async function loadModelBackends(path: string): Promise<Backends> {
  const mod = await import(pathToFileURL(resolve(path)).href);
  const merged: Backends = {
    restore: typeof mod.restore === 'function' ? mod.restore : builtinBackends.restore,
    clipSim: typeof mod.clipSim === 'function' ? mod.clipSim : builtinBackends.clipSim,
    niqe: typeof mod.niqe === 'function' ? mod.niqe : builtinBackends.niqe,
  };
  return mod.reentrant === true ? merged : serialized(merged);
}
