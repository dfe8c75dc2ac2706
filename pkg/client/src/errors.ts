/** Typed errors: one class per documented failure mode. */

import type { ApiErrorBody } from "./types.js";

export class RegistryClientError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Non-2xx response with the registry's {status, code, message} body. */
export class ApiError extends RegistryClientError {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class BadRequestError extends ApiError {}

export class NotFoundError extends ApiError {}

/** 409: a fingerprint-identical skill already exists; carries its id. */
export class DuplicateError extends ApiError {
  readonly existingId: string | null;

  constructor(status: number, code: string, message: string) {
    super(status, code, message);
    const match = /:\s*(\S+)\s*$/.exec(message);
    this.existingId = match ? match[1] : null;
  }
}

/** 422: the registry refused the request (admission or validation). */
export class RejectedError extends ApiError {}

/** Transport failure that survived the retry budget. */
export class ConnectivityError extends RegistryClientError {}

/** Downloaded archive does not match the registry's fingerprints. */
export class IntegrityError extends RegistryClientError {}

export function errorFromBody(body: ApiErrorBody): ApiError {
  const { status, code, message } = body;
  switch (status) {
    case 400:
      return new BadRequestError(status, code, message);
    case 404:
      return new NotFoundError(status, code, message);
    case 409:
      return new DuplicateError(status, code, message);
    case 422:
      return new RejectedError(status, code, message);
    default:
      return new ApiError(status, code, message);
  }
}
