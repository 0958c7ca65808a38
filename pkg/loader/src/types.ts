/** Manifest and sample shapes for format version 1 (see docs/FORMAT.md). */

export interface FileEntry {
  bytes: number;
  digest: string; // first 8 bytes of SHA-256, lowercase hex
}

export interface TrajectoryEntry {
  city: number;
  index: number;
  mode_id: number;
  seed: number;
  dir: string;
  frames: number;
  los_count: number;
  files: Record<string, FileEntry>;
}

export interface Manifest {
  format_version: number;
  config: Record<string, unknown>;
  codebook: Record<string, unknown>;
  splits: Record<"train" | "val" | "test", number[]>;
  scenes: Record<string, string>;
  trajectories: TrajectoryEntry[];
}

export interface FrameLabel {
  t: number;
  gt_pos: [number, number, number];
  gps: [number, number, number];
  mode_id: number;
  los: boolean;
  degenerate: boolean;
  top5_global: number[];
  top5_tuples: number[][];
  top5_gains: number[];
  n_paths_ref: number;
  rms_delay_spread_s: number;
}

export interface TrajectoryLabels {
  mode_id: number;
  seed: number;
  frames: FrameLabel[];
}

/** One frame's channel as split real/imag planes, row-major (M, K). */
export interface CsiFrame {
  m: number;
  k: number;
  real: Float32Array;
  imag: Float32Array;
}

export interface LoadedSample {
  city: number;
  trajectory: string;
  frame: number;
  label: FrameLabel;
  csi: CsiFrame;
  /** Lazy modality readers (cloud points are (P, 3) row-major). */
  loadCloud(): Float32Array;
  loadDepthMeters(): Float64Array;
  loadSemantic(): Uint8Array;
}
