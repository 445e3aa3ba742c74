import { Interval } from "./types";

export type Marking = "none" | "a" | "b" | "both";

export interface Segment {
  start: number;
  end: number;
  marking: Marking;
}

/**
 * Split [0, length) into maximal runs with a constant marking, given the
 * currently active highlight intervals for each side. Offsets come straight
 * from the service; no re-searching of the text happens here.
 */
export function segmentText(
  length: number,
  aIntervals: Interval[],
  bIntervals: Interval[],
): Segment[] {
  const inA = coverageMask(length, aIntervals);
  const inB = coverageMask(length, bIntervals);
  const segments: Segment[] = [];
  let start = 0;
  for (let i = 1; i <= length; i++) {
    if (i === length || markingAt(inA, inB, i) !== markingAt(inA, inB, start)) {
      segments.push({ start, end: i, marking: markingAt(inA, inB, start) });
      start = i;
    }
  }
  return segments;
}

function coverageMask(length: number, intervals: Interval[]): boolean[] {
  const mask = new Array<boolean>(length).fill(false);
  for (const [s, e] of intervals) {
    for (let i = Math.max(0, s); i < Math.min(length, e); i++) mask[i] = true;
  }
  return mask;
}

function markingAt(inA: boolean[], inB: boolean[], i: number): Marking {
  if (inA[i] && inB[i]) return "both";
  if (inA[i]) return "a";
  if (inB[i]) return "b";
  return "none";
}

/** Per-item highlight toggle state; both sides can be active at once. */
export class HighlightState {
  private active = new Set<string>();

  toggle(itemIndex: number, side: "a" | "b"): boolean {
    const key = `${itemIndex}:${side}`;
    if (this.active.has(key)) {
      this.active.delete(key);
      return false;
    }
    this.active.add(key);
    return true;
  }

  isActive(itemIndex: number, side: "a" | "b"): boolean {
    return this.active.has(`${itemIndex}:${side}`);
  }

  activeIntervals(
    items: { index: number; highlight_a: Interval[]; highlight_b: Interval[] }[],
    side: "a" | "b",
  ): Interval[] {
    const out: Interval[] = [];
    for (const item of items) {
      if (!this.isActive(item.index, side)) continue;
      out.push(...(side === "a" ? item.highlight_a : item.highlight_b));
    }
    return out;
  }
}
