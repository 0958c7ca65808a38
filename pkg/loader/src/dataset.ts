/** Read-only dataset handle: manifest loading, sample iteration, integrity. */

import { createHash } from "node:crypto";
import { existsSync, readFileSync, statSync } from "node:fs";
import { join } from "node:path";

import { csiFrame, FORMAT_VERSION, readCloud, readCsi, readDepthMeters, readPgm } from "./binary.js";
import { DanglingReferenceError, FormatVersionError } from "./errors.js";
import type { LoadedSample, Manifest, TrajectoryEntry, TrajectoryLabels } from "./types.js";

/** 64-bit file digest: first 8 bytes of SHA-256, lowercase hex. */
export function fileDigest(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex").slice(0, 16);
}

export type Split = "train" | "val" | "test";

export class Dataset {
  readonly root: string;
  readonly manifest: Manifest;

  constructor(root: string) {
    this.root = root;
    const manifestPath = join(root, "manifest.json");
    if (!existsSync(manifestPath)) {
      throw new DanglingReferenceError(`no manifest at ${manifestPath}`);
    }
    this.manifest = JSON.parse(readFileSync(manifestPath, "utf8")) as Manifest;
    if (this.manifest.format_version !== FORMAT_VERSION) {
      throw new FormatVersionError(
        `dataset format version ${this.manifest.format_version}, reader supports ${FORMAT_VERSION}`,
      );
    }
  }

  trajectoryEntries(split?: Split): TrajectoryEntry[] {
    if (split === undefined) {
      return this.manifest.trajectories;
    }
    const cities = new Set(this.manifest.splits[split]);
    return this.manifest.trajectories.filter((e) => cities.has(e.city));
  }

  /** Lazy sample iteration: one CSI read serves all frames of a trajectory. */
  *samples(split?: Split): Generator<LoadedSample> {
    for (const entry of this.trajectoryEntries(split)) {
      const dir = join(this.root, entry.dir);
      const labels = JSON.parse(readFileSync(join(dir, "labels.json"), "utf8")) as TrajectoryLabels;
      const tensor = readCsi(join(dir, "csi.bin"));
      for (let f = 0; f < labels.frames.length; f++) {
        const { real, imag } = csiFrame(tensor, f);
        const frame = f;
        yield {
          city: entry.city,
          trajectory: entry.dir,
          frame,
          label: labels.frames[f],
          csi: { m: tensor.m, k: tensor.k, real, imag },
          loadCloud: () => readCloud(join(dir, `cloud_${pad4(frame)}.bin`)),
          loadDepthMeters: () => readDepthMeters(join(dir, `view_${pad4(frame)}_depth.pgm`)),
          loadSemantic: () => readPgm(join(dir, `view_${pad4(frame)}_sem.pgm`)).data as Uint8Array,
        };
      }
    }
  }

  /** Recompute every digest; returns a list of problems (empty = clean). */
  verify(): string[] {
    const problems: string[] = [];
    for (const entry of this.manifest.trajectories) {
      for (const [name, meta] of Object.entries(entry.files)) {
        const p = join(this.root, entry.dir, name);
        if (!existsSync(p)) {
          problems.push(`missing file: ${entry.dir}/${name}`);
          continue;
        }
        const size = statSync(p).size;
        if (size !== meta.bytes) {
          problems.push(`size mismatch: ${entry.dir}/${name} is ${size}, manifest says ${meta.bytes}`);
          continue;
        }
        if (fileDigest(p) !== meta.digest) {
          problems.push(`digest mismatch: ${entry.dir}/${name}`);
        }
      }
    }
    for (const [city, sceneRel] of Object.entries(this.manifest.scenes)) {
      if (!existsSync(join(this.root, sceneRel))) {
        problems.push(`missing scene file for city ${city}: ${sceneRel}`);
      }
    }
    return problems;
  }
}

function pad4(n: number): string {
  return n.toString().padStart(4, "0");
}

export function loadManifest(root: string): Dataset {
  return new Dataset(root);
}
