export {
  csiFrame,
  DEPTH_UNITS_PER_METER,
  FORMAT_VERSION,
  readCloud,
  readCsi,
  readDepthMeters,
  readPgm,
} from "./binary.js";
export { Dataset, fileDigest, loadManifest } from "./dataset.js";
export {
  ChecksumError,
  DanglingReferenceError,
  FormatVersionError,
  ShapeMismatchError,
} from "./errors.js";
export type {
  CsiFrame,
  FileEntry,
  FrameLabel,
  LoadedSample,
  Manifest,
  TrajectoryEntry,
  TrajectoryLabels,
} from "./types.js";
