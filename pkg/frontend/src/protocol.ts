/**
 * Types, codecs, and the transport-free request core for the deformation
 * session protocol (schema version 1).
 *
 * Every message is a JSON object with `schema_version` and `type`; client
 * messages carry a strictly increasing integer `id` which the server echoes
 * in the single Ack or Error each request receives. Pushed documents
 * (MeshTopology, Frame) arrive before the Ack of the request that produced
 * them. Vertex buffers travel as base64 of little-endian float64/uint32
 * bytes, row-major (n, 3).
 */

export const SCHEMA_VERSION = 1;

export type GeneratorKind =
  | "grid_plane"
  | "bumpy_plane"
  | "bumpy_cylinder"
  | "bar"
  | "spiky_plane";

export interface GeneratorSpec {
  kind: GeneratorKind;
  resolution: number;
  params?: Record<string, unknown>;
}

/** What to load: an uploaded mesh file or a named generator. */
export type MeshSource =
  | { format: "obj" | "off"; payload: string }
  | { generator: GeneratorSpec };

export interface ParamUpdate {
  lambda?: number;
  tolerance?: number;
  maxIterPerFrame?: number;
}

export interface FrameEnergies {
  total: number;
  arap: number;
  smooth: number;
}

export interface MeshTopologyMessage {
  schema_version: number;
  type: "MeshTopology";
  num_vertices: number;
  num_triangles: number;
  /** base64, little-endian uint32, (num_triangles, 3) */
  triangles: string;
  /** base64, little-endian float64, (num_vertices, 3) */
  positions: string;
}

export interface FrameMessage {
  schema_version: number;
  type: "Frame";
  /** session-wide counter; render in this order, drop stale frames */
  iteration: number;
  iterations_run: number;
  positions: string;
  energies: FrameEnergies;
}

export interface AckMessage {
  schema_version: number;
  type: "Ack";
  id: number;
}

export interface ErrorMessage {
  schema_version: number;
  type: "Error";
  id: number | null;
  code: string;
  message: string;
}

export type ServerMessage =
  | MeshTopologyMessage
  | FrameMessage
  | AckMessage
  | ErrorMessage;

// ---------------------------------------------------------------------------
// binary codecs
// ---------------------------------------------------------------------------

function bytesFromBase64(b64: string): Uint8Array {
  const text = atob(b64);
  const bytes = new Uint8Array(text.length);
  for (let i = 0; i < text.length; i++) bytes[i] = text.charCodeAt(i);
  return bytes;
}

function base64FromBytes(bytes: Uint8Array): string {
  let text = "";
  for (let i = 0; i < bytes.length; i++) text += String.fromCharCode(bytes[i]!);
  return btoa(text);
}

/**
 * Decode a base64 little-endian float64 buffer. The typed-array view assumes
 * a little-endian host, which covers every platform this UI targets.
 */
export function decodeFloat64(b64: string): Float64Array {
  const bytes = bytesFromBase64(b64);
  return new Float64Array(bytes.buffer, 0, bytes.byteLength / 8);
}

export function decodeUint32(b64: string): Uint32Array {
  const bytes = bytesFromBase64(b64);
  return new Uint32Array(bytes.buffer, 0, bytes.byteLength / 4);
}

export function encodeFloat64(values: ArrayLike<number>): string {
  const array = Float64Array.from(values as ArrayLike<number>);
  return base64FromBytes(new Uint8Array(array.buffer));
}

// ---------------------------------------------------------------------------
// request/reply core
// ---------------------------------------------------------------------------

/** An Error reply from the service, surfaced as a rejection. */
export class SessionRequestError extends Error {
  readonly code: string;
  readonly id: number | null;

  constructor(code: string, message: string, id: number | null) {
    super(`${code}: ${message}`);
    this.name = "SessionRequestError";
    this.code = code;
    this.id = id;
  }
}

interface Pending {
  id: number;
  resolve: (ack: AckMessage) => void;
  reject: (error: Error) => void;
}

export interface ProtocolHooks {
  onTopology?: (topology: MeshTopologyMessage) => void;
  onFrame?: (frame: FrameMessage) => void;
}

/**
 * Owns the id counter and the pending-request queue; knows nothing about
 * the transport. Feed outgoing requests through the typed helpers and every
 * incoming server message to `handleMessage`; Acks/Errors settle the oldest
 * matching request, pushes go to the hooks.
 */
export class SessionProtocol {
  private readonly send: (text: string) => void;
  private readonly hooks: ProtocolHooks;
  private nextId = 1;
  private pending: Pending[] = [];

  constructor(send: (text: string) => void, hooks: ProtocolHooks = {}) {
    this.send = send;
    this.hooks = hooks;
  }

  get pendingCount(): number {
    return this.pending.length;
  }

  request(type: string, fields: Record<string, unknown> = {}): Promise<AckMessage> {
    const id = this.nextId++;
    const message = { schema_version: SCHEMA_VERSION, id, type, ...fields };
    return new Promise((resolve, reject) => {
      this.pending.push({ id, resolve, reject });
      this.send(JSON.stringify(message));
    });
  }

  loadMesh(source: MeshSource): Promise<AckMessage> {
    return this.request("LoadMesh", source);
  }

  setParams(update: ParamUpdate): Promise<AckMessage> {
    const fields: Record<string, unknown> = {};
    if (update.lambda !== undefined) fields["lambda"] = update.lambda;
    if (update.tolerance !== undefined) fields["tolerance"] = update.tolerance;
    if (update.maxIterPerFrame !== undefined) {
      fields["max_iter_per_frame"] = update.maxIterPerFrame;
    }
    return this.request("SetParams", fields);
  }

  addHandle(vertex: number): Promise<AckMessage> {
    return this.request("AddHandle", { vertex });
  }

  moveHandle(vertex: number, position: readonly number[]): Promise<AckMessage> {
    return this.request("MoveHandle", { vertex, position: [...position] });
  }

  removeHandle(vertex: number): Promise<AckMessage> {
    return this.request("RemoveHandle", { vertex });
  }

  resetPose(): Promise<AckMessage> {
    return this.request("ResetPose");
  }

  shutdown(): Promise<AckMessage> {
    return this.request("Shutdown");
  }

  /** Route one decoded or raw server message. Returns the parsed message. */
  handleMessage(raw: string | ServerMessage): ServerMessage {
    const message: ServerMessage = typeof raw === "string" ? JSON.parse(raw) : raw;
    switch (message.type) {
      case "MeshTopology":
        this.hooks.onTopology?.(message);
        break;
      case "Frame":
        this.hooks.onFrame?.(message);
        break;
      case "Ack":
        this.settle(message.id)?.resolve(message);
        break;
      case "Error": {
        const error = new SessionRequestError(message.code, message.message, message.id);
        const entry = this.settle(message.id);
        if (entry) entry.reject(error);
        else throw error; // unsolicited error (e.g. a frame the server rejected)
        break;
      }
    }
    return message;
  }

  /** Reject everything in flight (connection dropped, session replaced). */
  failAll(reason: string): void {
    const dropped = this.pending;
    this.pending = [];
    for (const entry of dropped) {
      entry.reject(new SessionRequestError("connection-lost", reason, entry.id));
    }
  }

  private settle(id: number | null): Pending | undefined {
    // replies arrive in request order; a null id (pre-parse failure) can
    // only belong to the oldest outstanding request
    const index = id === null ? 0 : this.pending.findIndex((p) => p.id === id);
    if (index < 0 || index >= this.pending.length) return undefined;
    return this.pending.splice(index, 1)[0];
  }
}
