// Completion-progress math, matching the analysis pipeline's definition:
// ratio r_t = d_t / d_0, completion% = 100 * (1 - r_t). Values above d_0
// yield negative completion (the pilot is diverging) and are representable.

export function ratios(distances: number[]): number[] {
  if (distances.length === 0) return [];
  const d0 = distances[0];
  if (d0 <= 0) throw new Error("degenerate start: zero initial distance");
  return distances.map((d) => d / d0);
}

export function completionPercent(distances: number[]): number[] {
  return ratios(distances).map((r) => 100 * (1 - r));
}
