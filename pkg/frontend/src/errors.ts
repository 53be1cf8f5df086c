// Typed error channel for everything the viewer surfaces to the user:
// malformed bundles, undecodable files, failed fetches, bad state values.

export type ViewerErrorKind = "manifest" | "format" | "io" | "state";

export class ViewerError extends Error {
  readonly kind: ViewerErrorKind;

  constructor(kind: ViewerErrorKind, message: string) {
    super(message);
    this.name = "ViewerError";
    this.kind = kind;
  }
}

/** Narrowing helper for catch blocks. */
export function isViewerError(e: unknown): e is ViewerError {
  return e instanceof ViewerError;
}
