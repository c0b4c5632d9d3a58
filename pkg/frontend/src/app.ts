/**
 * Browser wiring: three.js scene, pointer interaction, and the control strip.
 * All protocol/interaction logic lives in the headless modules; this file only
 * translates DOM and render-loop events into calls on `SessionClient`.
 */

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";

import { SessionClient, type DecodedFrame, type DecodedTopology } from "./client";
import { liftToCameraPlane } from "./dragplane";
import type { Vec3 } from "./handles";
import { pickVertex, projectorFromMatrix, type Projector } from "./picking";
import {
  beginDrag,
  clampLambda,
  endDrag,
  initialViewState,
  LAMBDA_ARTIFACT_PRESET,
  LAMBDA_MAX,
  type ViewState,
} from "./viewstate";

const PICK_RADIUS_PX = 14;
const MARKER_RADIUS = 0.02;

interface Dom {
  canvas: HTMLCanvasElement;
  status: HTMLElement;
  energies: HTMLElement;
  lambdaSlider: HTMLInputElement;
  lambdaLabel: HTMLElement;
  presetButton: HTMLButtonElement;
  resetButton: HTMLButtonElement;
  wireframeToggle: HTMLInputElement;
  meshSelect: HTMLSelectElement;
  loadButton: HTMLButtonElement;
}

function requireElement<T extends Element>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as unknown as T;
}

export function startApp(serverUrl: string): void {
  const dom: Dom = {
    canvas: requireElement<HTMLCanvasElement>("viewport"),
    status: requireElement<HTMLElement>("status"),
    energies: requireElement<HTMLElement>("energies"),
    lambdaSlider: requireElement<HTMLInputElement>("lambda"),
    lambdaLabel: requireElement<HTMLElement>("lambda-value"),
    presetButton: requireElement<HTMLButtonElement>("preset"),
    resetButton: requireElement<HTMLButtonElement>("reset"),
    wireframeToggle: requireElement<HTMLInputElement>("wireframe"),
    meshSelect: requireElement<HTMLSelectElement>("mesh"),
    loadButton: requireElement<HTMLButtonElement>("load"),
  };

  const state: ViewState = initialViewState();

  // -- scene -----------------------------------------------------------------
  const renderer = new THREE.WebGLRenderer({ canvas: dom.canvas, antialias: true });
  renderer.setPixelRatio(window.devicePixelRatio);
  const scene = new THREE.Scene();
  scene.background = new THREE.Color(0x10131a);
  const camera = new THREE.PerspectiveCamera(45, 1, 0.01, 100);
  camera.position.set(1.4, 1.1, 1.6);
  const controls = new OrbitControls(camera, dom.canvas);
  controls.enableDamping = true;

  scene.add(new THREE.AmbientLight(0xffffff, 0.45));
  const keyLight = new THREE.DirectionalLight(0xffffff, 1.4);
  keyLight.position.set(2, 3, 2);
  scene.add(keyLight);
  const fillLight = new THREE.DirectionalLight(0x8899ff, 0.5);
  fillLight.position.set(-2, 1, -2);
  scene.add(fillLight);

  const material = new THREE.MeshStandardMaterial({
    color: 0x7fa6d9,
    roughness: 0.55,
    metalness: 0.05,
    side: THREE.DoubleSide,
  });
  const wireMaterial = new THREE.MeshBasicMaterial({
    color: 0x223044,
    wireframe: true,
    transparent: true,
    opacity: 0.35,
  });

  let surface: THREE.Mesh | null = null;
  let wireOverlay: THREE.Mesh | null = null;
  let geometry: THREE.BufferGeometry | null = null;

  const markerGroup = new THREE.Group();
  scene.add(markerGroup);
  const markerGeometry = new THREE.SphereGeometry(MARKER_RADIUS, 16, 12);
  const markerMaterial = new THREE.MeshBasicMaterial({ color: 0xffb347 });
  const markerHoverMaterial = new THREE.MeshBasicMaterial({ color: 0xff5533 });

  // -- client ------------------------------------------------------------------
  const client = new SessionClient(serverUrl, {
    onStatus: (status) => {
      state.connection = status;
      dom.status.textContent = status;
      dom.status.dataset["state"] = status;
    },
    onTopology: (topology) => rebuildGeometry(topology),
    onFrame: (frame) => applyFrame(frame),
    onError: (error) => {
      dom.status.textContent = `error: ${error.message}`;
    },
  });

  function rebuildGeometry(topology: DecodedTopology): void {
    if (surface !== null) {
      scene.remove(surface);
      if (wireOverlay !== null) surface.remove(wireOverlay);
    }
    geometry?.dispose();
    geometry = new THREE.BufferGeometry();
    geometry.setIndex(new THREE.BufferAttribute(topology.triangles.slice(), 1));
    const positions = new Float32Array(topology.restPositions);
    geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    geometry.computeVertexNormals();
    surface = new THREE.Mesh(geometry, material);
    wireOverlay = new THREE.Mesh(geometry, wireMaterial);
    wireOverlay.visible = state.wireframe;
    surface.add(wireOverlay);
    scene.add(surface);
    syncMarkers();
  }

  function applyFrame(frame: DecodedFrame): void {
    if (geometry === null) return;
    const attribute = geometry.getAttribute("position") as THREE.BufferAttribute;
    const array = attribute.array as Float32Array;
    for (let i = 0; i < frame.positions.length; i += 1) array[i] = frame.positions[i]!;
    attribute.needsUpdate = true;
    geometry.computeVertexNormals();
    const { total, arap, smooth } = frame.energies;
    dom.energies.textContent =
      `iter ${frame.iteration}  total ${total.toExponential(3)}  ` +
      `rigid ${arap.toExponential(3)}  smooth ${smooth.toExponential(3)}`;
    syncMarkers();
  }

  function syncMarkers(): void {
    const positions = client.positions;
    markerGroup.clear();
    if (positions === null) return;
    for (const marker of client.handles.markers()) {
      const mesh = new THREE.Mesh(
        markerGeometry,
        marker.vertex === state.hovered ? markerHoverMaterial : markerMaterial,
      );
      mesh.position.set(
        positions[3 * marker.vertex]!,
        positions[3 * marker.vertex + 1]!,
        positions[3 * marker.vertex + 2]!,
      );
      markerGroup.add(mesh);
    }
  }

  // -- picking ------------------------------------------------------------------
  const viewProjection = new THREE.Matrix4();

  function currentProjector(): Projector {
    camera.updateMatrixWorld();
    viewProjection.multiplyMatrices(camera.projectionMatrix, camera.matrixWorldInverse);
    const rect = dom.canvas.getBoundingClientRect();
    return projectorFromMatrix(Array.from(viewProjection.elements), rect.width, rect.height);
  }

  function pickAt(event: PointerEvent): number | null {
    const positions = client.positions;
    if (positions === null) return null;
    const rect = dom.canvas.getBoundingClientRect();
    const point = { x: event.clientX - rect.left, y: event.clientY - rect.top };
    return pickVertex(positions, currentProjector(), point, PICK_RADIUS_PX);
  }

  const raycaster = new THREE.Raycaster();

  function pointerRay(event: PointerEvent): { origin: Vec3; dir: Vec3 } {
    const rect = dom.canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((event.clientX - rect.left) / rect.width) * 2 - 1,
      -((event.clientY - rect.top) / rect.height) * 2 + 1,
    );
    raycaster.setFromCamera(ndc, camera);
    const { origin, direction } = raycaster.ray;
    return { origin: [origin.x, origin.y, origin.z], dir: [direction.x, direction.y, direction.z] };
  }

  function viewDirection(): Vec3 {
    const dir = new THREE.Vector3();
    camera.getWorldDirection(dir);
    return [dir.x, dir.y, dir.z];
  }

  // -- drag loop -----------------------------------------------------------------
  // at most one MoveHandle per animation frame: the render loop flushes the
  // latest pointer target, earlier targets within the same frame are dropped
  let pendingDragTarget: Vec3 | null = null;
  let moveInFlight = false;

  function flushDrag(): void {
    if (state.drag === null || pendingDragTarget === null || moveInFlight) return;
    const target = pendingDragTarget;
    pendingDragTarget = null;
    const sent = client.moveHandle(state.drag.vertex, target);
    if (sent === null) return;
    moveInFlight = true;
    sent
      .catch(() => undefined)
      .finally(() => {
        moveInFlight = false;
      });
  }

  dom.canvas.addEventListener("pointerdown", (event) => {
    if (event.button !== 0 || state.connection !== "open") return;
    const vertex = pickAt(event);
    if (vertex === null) return;
    if (client.handles.isHandle(vertex)) {
      if (beginDrag(state, vertex, event.pointerId)) {
        controls.enabled = false;
        dom.canvas.setPointerCapture(event.pointerId);
        event.preventDefault();
      }
    } else {
      void client.addHandle(vertex).then(() => syncMarkers());
      event.preventDefault();
    }
  });

  dom.canvas.addEventListener("pointermove", (event) => {
    if (state.drag === null || state.drag.pointerId !== event.pointerId) {
      state.hovered = client.positions === null ? null : pickAt(event);
      syncMarkers();
      return;
    }
    const handle = client.handles.target(state.drag.vertex);
    if (handle === undefined) return;
    const lifted = liftToCameraPlane(handle, viewDirection(), pointerRay(event));
    if (lifted !== null) pendingDragTarget = lifted;
  });

  function finishDrag(event: PointerEvent): void {
    if (endDrag(state, event.pointerId)) {
      controls.enabled = true;
      dom.canvas.releasePointerCapture(event.pointerId);
      pendingDragTarget = null;
    }
  }
  dom.canvas.addEventListener("pointerup", finishDrag);
  dom.canvas.addEventListener("pointercancel", finishDrag);

  dom.canvas.addEventListener("contextmenu", (event) => {
    // right-click a marker to unpin it
    const vertex = pickAt(event as unknown as PointerEvent);
    if (vertex !== null && client.handles.isHandle(vertex)) {
      event.preventDefault();
      void client.removeHandle(vertex).then(() => syncMarkers());
    }
  });

  // -- controls --------------------------------------------------------------------
  function showLambda(value: number): void {
    dom.lambdaSlider.value = String(value);
    dom.lambdaLabel.textContent = value.toFixed(3);
  }
  dom.lambdaSlider.min = "0";
  dom.lambdaSlider.max = String(LAMBDA_MAX);
  dom.lambdaSlider.step = "0.001";
  showLambda(state.lambda);

  dom.lambdaSlider.addEventListener("change", () => {
    const value = clampLambda(Number(dom.lambdaSlider.value));
    state.lambda = value;
    showLambda(value);
    void client.setLambda(value);
  });
  dom.presetButton.addEventListener("click", () => {
    state.lambda = LAMBDA_ARTIFACT_PRESET;
    showLambda(state.lambda);
    void client.setLambda(state.lambda);
  });
  dom.resetButton.addEventListener("click", () => {
    void client.resetPose().then(() => syncMarkers());
  });
  dom.wireframeToggle.addEventListener("change", () => {
    state.wireframe = dom.wireframeToggle.checked;
    if (wireOverlay !== null) wireOverlay.visible = state.wireframe;
  });
  dom.loadButton.addEventListener("click", () => {
    const [kind, resolution] = dom.meshSelect.value.split(":");
    void client.loadMesh({
      generator: { kind: kind as never, resolution: Number(resolution) },
    });
  });

  // -- render loop -------------------------------------------------------------------
  function resize(): void {
    const rect = dom.canvas.getBoundingClientRect();
    renderer.setSize(rect.width, rect.height, false);
    camera.aspect = rect.width / Math.max(rect.height, 1);
    camera.updateProjectionMatrix();
  }
  window.addEventListener("resize", resize);
  resize();

  renderer.setAnimationLoop(() => {
    flushDrag();
    controls.update();
    renderer.render(scene, camera);
  });

  client.connect();
  // default scene so the page is interactive immediately
  void waitForOpen(client).then(() =>
    client.loadMesh({ generator: { kind: "bumpy_plane", resolution: 33 } }),
  );
}

function waitForOpen(client: SessionClient): Promise<void> {
  return new Promise((resolve) => {
    const poll = () => {
      if (client.connection === "open") resolve();
      else setTimeout(poll, 50);
    };
    poll();
  });
}
