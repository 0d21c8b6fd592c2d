/** Attention visualization data: per-head token-weight bars for one
 * class, taken verbatim from the service JSON (the UI never rescales or
 * renormalizes the weights it displays). */

import type { AttentionResponse } from "./types.js";

export interface HeadBars {
  head: number;
  /** One weight per token, exactly as served; sums to 1 per head. */
  weights: number[];
}

export function classNames(resp: AttentionResponse): string[] {
  return Object.keys(resp.classes).sort();
}

export function barsForClass(
  resp: AttentionResponse,
  className: string,
): HeadBars[] {
  const rows = resp.classes[className];
  if (rows === undefined) {
    throw new Error(`class ${JSON.stringify(className)} not in response`);
  }
  if (rows.length !== resp.heads) {
    throw new Error(
      `expected ${resp.heads} heads for ${className}, got ${rows.length}`,
    );
  }
  return rows.map((weights, head) => {
    if (weights.length !== resp.n_tokens) {
      throw new Error(
        `head ${head}: expected ${resp.n_tokens} tokens, got ${weights.length}`,
      );
    }
    return { head, weights: weights.slice() };
  });
}

/** Pixel widths for rendering; purely presentational, the underlying
 * numbers stay untouched and are what DOM checks compare against. */
export function barWidths(bars: HeadBars, maxWidthPx: number): number[] {
  return bars.weights.map((w) => w * maxWidthPx);
}

/** Sanity check used by the UI before drawing: each head's weights must
 * sum to 1 within tolerance, or the payload is rejected loudly. */
export function validateRowSums(
  bars: HeadBars[],
  tolerance = 1e-9,
): void {
  for (const { head, weights } of bars) {
    const sum = weights.reduce((a, b) => a + b, 0);
    if (Math.abs(sum - 1) > tolerance) {
      throw new Error(`head ${head} weights sum to ${sum}, expected 1`);
    }
  }
}
