/**
 * Headless session controller: WebSocket transport with backoff reconnect,
 * the request/reply protocol, stale-frame dropping, and the handle-marker
 * mirror. `app.ts` renders on top of this; the round-trip tests drive it
 * directly against a live service.
 */

import { FrameGate } from "./frames";
import { HandleStore, type Vec3 } from "./handles";
import {
  SessionProtocol,
  decodeFloat64,
  decodeUint32,
  type AckMessage,
  type FrameEnergies,
  type FrameMessage,
  type MeshSource,
  type MeshTopologyMessage,
  type ParamUpdate,
} from "./protocol";
import { clampLambda, LAMBDA_DEFAULT, type ConnectionStatus } from "./viewstate";

export interface DecodedTopology {
  numVertices: number;
  numTriangles: number;
  triangles: Uint32Array;
  restPositions: Float64Array;
}

export interface DecodedFrame {
  iteration: number;
  iterationsRun: number;
  positions: Float64Array;
  energies: FrameEnergies;
}

/** The slice of the WebSocket API the client uses (browser and `ws` both fit). */
export interface WebSocketLike {
  onopen: ((event: unknown) => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: ((event: unknown) => void) | null;
  onerror: ((event: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export interface SessionClientOptions {
  /** Defaults to the global WebSocket constructor (browser / modern Node). */
  webSocketFactory?: (url: string) => WebSocketLike;
  /** Reconnect with exponential backoff after a drop (default true). */
  reconnect?: boolean;
  initialDelayMs?: number;
  maxDelayMs?: number;
  onStatus?: (status: ConnectionStatus) => void;
  onTopology?: (topology: DecodedTopology) => void;
  /** Called only for fresh frames, in iteration order. */
  onFrame?: (frame: DecodedFrame) => void;
  onError?: (error: Error) => void;
}

const INITIAL_RECONNECT_DELAY = 1000;
const MAX_RECONNECT_DELAY = 30000;

export class SessionClient {
  readonly handles = new HandleStore();

  private readonly url: string;
  private readonly options: SessionClientOptions;
  private readonly makeSocket: (url: string) => WebSocketLike;
  private readonly gate = new FrameGate();
  private protocol: SessionProtocol;
  private socket: WebSocketLike | null = null;
  private shouldReconnect: boolean;
  private reconnectDelay: number;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  private meshSource: MeshSource | null = null;
  private lambdaValue = LAMBDA_DEFAULT;
  private topologyData: DecodedTopology | null = null;
  private currentPositions: Float64Array | null = null;
  private lastEnergies: FrameEnergies | null = null;
  private status: ConnectionStatus = "closed";
  private sentCount = 0;

  constructor(url: string, options: SessionClientOptions = {}) {
    this.url = url;
    this.options = options;
    this.makeSocket =
      options.webSocketFactory ??
      ((u) => new (globalThis as { WebSocket: new (url: string) => WebSocketLike }).WebSocket(u));
    this.shouldReconnect = options.reconnect ?? true;
    this.reconnectDelay = options.initialDelayMs ?? INITIAL_RECONNECT_DELAY;
    this.protocol = this.makeProtocol();
  }

  get connection(): ConnectionStatus {
    return this.status;
  }

  get lambda(): number {
    return this.lambdaValue;
  }

  get topology(): DecodedTopology | null {
    return this.topologyData;
  }

  /** Positions as of the last applied frame (rest pose right after load). */
  get positions(): Float64Array | null {
    return this.currentPositions;
  }

  get energies(): FrameEnergies | null {
    return this.lastEnergies;
  }

  /** Messages actually written to the socket (tests assert on this). */
  get messagesSent(): number {
    return this.sentCount;
  }

  connect(): void {
    if (this.socket !== null) return;
    this.setStatus("connecting");
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.reconnectDelay = this.options.initialDelayMs ?? INITIAL_RECONNECT_DELAY;
      this.setStatus("open");
      this.restoreSession();
    };
    socket.onmessage = (event) => {
      try {
        this.protocol.handleMessage(String(event.data));
      } catch (error) {
        this.options.onError?.(error as Error);
      }
    };
    socket.onerror = () => {
      // the close handler does the bookkeeping; nothing useful in the event
    };
    socket.onclose = () => {
      this.socket = null;
      this.protocol.failAll("connection closed");
      this.handles.reset(); // a future session starts with no constraints
      this.setStatus("closed");
      this.scheduleReconnect();
    };
  }

  close(): void {
    this.shouldReconnect = false;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
  }

  // -- requests --------------------------------------------------------------

  /** Load a mesh; remembered so a reconnect can restore the session. */
  async loadMesh(source: MeshSource): Promise<DecodedTopology> {
    this.meshSource = source;
    this.gate.reset();
    this.handles.reset();
    await this.protocol.loadMesh(source);
    if (this.topologyData === null) throw new Error("LoadMesh acked without topology");
    return this.topologyData;
  }

  async setLambda(value: number): Promise<void> {
    const lambda = clampLambda(value);
    await this.protocol.setParams({ lambda });
    this.lambdaValue = lambda;
  }

  async setParams(update: ParamUpdate): Promise<void> {
    await this.protocol.setParams(update);
    if (update.lambda !== undefined) this.lambdaValue = clampLambda(update.lambda);
  }

  /**
   * Pin a vertex at its current position. Resolves true when the server
   * acknowledged; false when the request was not sent (another add/remove in
   * flight, or already a handle).
   */
  async addHandle(vertex: number): Promise<boolean> {
    if (!this.handles.beginAdd(vertex)) return false;
    try {
      await this.protocol.addHandle(vertex);
    } catch (error) {
      this.handles.failAdd(vertex);
      throw error;
    }
    this.handles.resolveAdd(vertex, this.positionOf(vertex));
    return true;
  }

  /**
   * Retarget a handle. Never sends anything for a vertex that is not an
   * acknowledged handle (returns null); otherwise resolves with the frame's
   * Ack.
   */
  moveHandle(vertex: number, target: Vec3): Promise<AckMessage> | null {
    if (!this.handles.canMove(vertex)) return null;
    const sent = this.protocol.moveHandle(vertex, target);
    return sent.then((ack) => {
      this.handles.setTarget(vertex, target);
      return ack;
    });
  }

  async removeHandle(vertex: number): Promise<boolean> {
    if (!this.handles.beginRemove(vertex)) return false;
    try {
      await this.protocol.removeHandle(vertex);
    } catch (error) {
      this.handles.failRemove(vertex);
      throw error;
    }
    this.handles.resolveRemove(vertex);
    return true;
  }

  /** Snap back to rest; handle targets return to their rest positions. */
  async resetPose(): Promise<void> {
    await this.protocol.resetPose();
    for (const marker of this.handles.markers()) {
      this.handles.setTarget(marker.vertex, this.restPositionOf(marker.vertex));
    }
  }

  async shutdown(): Promise<void> {
    await this.protocol.shutdown();
  }

  // -- internals ---------------------------------------------------------------

  private makeProtocol(): SessionProtocol {
    return new SessionProtocol(
      (text) => {
        if (this.socket === null) throw new Error("not connected");
        this.sentCount += 1;
        this.socket.send(text);
      },
      {
        onTopology: (message) => this.applyTopology(message),
        onFrame: (message) => this.applyFrame(message),
      },
    );
  }

  private applyTopology(message: MeshTopologyMessage): void {
    const topology: DecodedTopology = {
      numVertices: message.num_vertices,
      numTriangles: message.num_triangles,
      triangles: decodeUint32(message.triangles),
      restPositions: decodeFloat64(message.positions),
    };
    this.topologyData = topology;
    this.currentPositions = topology.restPositions.slice();
    this.lastEnergies = null;
    this.gate.reset();
    this.options.onTopology?.(topology);
  }

  private applyFrame(message: FrameMessage): void {
    if (!this.gate.accept(message.iteration)) return; // stale frame dropped
    const frame: DecodedFrame = {
      iteration: message.iteration,
      iterationsRun: message.iterations_run,
      positions: decodeFloat64(message.positions),
      energies: message.energies,
    };
    this.currentPositions = frame.positions;
    this.lastEnergies = frame.energies;
    this.options.onFrame?.(frame);
  }

  private positionOf(vertex: number): Vec3 {
    const p = this.currentPositions;
    if (p === null) throw new Error("no mesh loaded");
    return [p[3 * vertex]!, p[3 * vertex + 1]!, p[3 * vertex + 2]!];
  }

  private restPositionOf(vertex: number): Vec3 {
    const p = this.topologyData?.restPositions;
    if (p === undefined) throw new Error("no mesh loaded");
    return [p[3 * vertex]!, p[3 * vertex + 1]!, p[3 * vertex + 2]!];
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.options.onStatus?.(status);
  }

  private restoreSession(): void {
    // fresh server session: re-apply lambda, then reload the mesh; handles
    // are gone until the user pins them again (the marker store was reset)
    const steps = async () => {
      if (this.lambdaValue !== LAMBDA_DEFAULT) {
        await this.protocol.setParams({ lambda: this.lambdaValue });
      }
      if (this.meshSource !== null) {
        this.gate.reset();
        await this.protocol.loadMesh(this.meshSource);
      }
    };
    steps().catch((error) => this.options.onError?.(error as Error));
  }

  private scheduleReconnect(): void {
    if (!this.shouldReconnect || this.reconnectTimer !== null) return;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, this.reconnectDelay);
    this.reconnectDelay = Math.min(
      this.reconnectDelay * 2,
      this.options.maxDelayMs ?? MAX_RECONNECT_DELAY,
    );
  }
}
