/** Error taxonomy mirroring the generator's validator. */

export class FormatVersionError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FormatVersionError";
  }
}

export class ChecksumError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ChecksumError";
  }
}

export class DanglingReferenceError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DanglingReferenceError";
  }
}

export class ShapeMismatchError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ShapeMismatchError";
  }
}
