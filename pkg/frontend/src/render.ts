/** three.js layer: geometry upload, node transforms, orbit camera. */

import * as THREE from "three";

import { ParsedMesh } from "./objParse";
import { SceneDoc } from "./sceneDoc";
import { OrbitState, WORLD_UP, cameraPosition } from "./orbit";

export interface RenderNode {
  solid: THREE.Mesh;
  proxy: THREE.Mesh; // gray stand-in for the printed reference model
}

export class Renderer3D {
  readonly renderer: THREE.WebGLRenderer;
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private nodes = new Map<string, RenderNode>();

  constructor(canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    this.camera = new THREE.PerspectiveCamera(45, 4 / 3, 1, 10_000);
    this.scene.background = new THREE.Color(0x14161c);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.45));
    const key = new THREE.DirectionalLight(0xffffff, 1.0);
    key.position.set(1, -1, 2);
    this.scene.add(key);
    this.scene.add(new THREE.AxesHelper(50));
  }

  resize(width: number, height: number): void {
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
  }

  setMesh(name: string, mesh: ParsedMesh, rgba: [number, number, number, number]): void {
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(mesh.positions, 3));
    if (mesh.normals) {
      geometry.setAttribute("normal", new THREE.BufferAttribute(mesh.normals, 3));
    } else {
      geometry.computeVertexNormals();
    }
    geometry.setIndex(new THREE.BufferAttribute(mesh.indices, 1));

    const [r, g, b, a] = rgba;
    const material = new THREE.MeshStandardMaterial({
      color: new THREE.Color(r, g, b),
      transparent: a < 1,
      opacity: a,
      side: THREE.DoubleSide,
      depthWrite: a >= 1,
    });
    const proxyMaterial = new THREE.MeshStandardMaterial({
      color: new THREE.Color(0.55, 0.55, 0.55),
      side: THREE.DoubleSide,
    });

    this.removeNode(name);
    const solid = new THREE.Mesh(geometry, material);
    const proxy = new THREE.Mesh(geometry, proxyMaterial);
    proxy.visible = false;
    this.scene.add(solid);
    this.scene.add(proxy);
    this.nodes.set(name, { solid, proxy });
  }

  private removeNode(name: string): void {
    const node = this.nodes.get(name);
    if (!node) return;
    this.scene.remove(node.solid);
    this.scene.remove(node.proxy);
    this.nodes.delete(name);
  }

  /** Reflect the authoritative scene document. */
  applyScene(doc: SceneDoc): void {
    for (const nodeDoc of doc.nodes) {
      const node = this.nodes.get(nodeDoc.name);
      if (!node) continue;
      node.solid.visible = nodeDoc.visible;
      const [w, x, y, z] = nodeDoc.transform.rotation;
      const q = new THREE.Quaternion(x, y, z, w);
      const t = nodeDoc.transform.translation;
      for (const obj of [node.solid, node.proxy]) {
        obj.quaternion.copy(q);
        obj.position.set(t[0], t[1], t[2]);
      }
    }
  }

  setProxyVisible(on: boolean): void {
    for (const [name, node] of this.nodes) {
      node.proxy.visible = on && name === "skull";
    }
  }

  boundingRadius(): number {
    const box = new THREE.Box3();
    for (const node of this.nodes.values()) box.expandByObject(node.solid);
    if (box.isEmpty()) return 100;
    const sphere = new THREE.Sphere();
    box.getBoundingSphere(sphere);
    return sphere.radius;
  }

  boundingCenter(): [number, number, number] {
    const box = new THREE.Box3();
    for (const node of this.nodes.values()) box.expandByObject(node.solid);
    if (box.isEmpty()) return [0, 0, 0];
    const c = new THREE.Vector3();
    box.getCenter(c);
    return [c.x, c.y, c.z];
  }

  draw(orbit: OrbitState): void {
    const eye = cameraPosition(orbit);
    this.camera.position.set(eye[0], eye[1], eye[2]);
    this.camera.up.set(WORLD_UP[0], WORLD_UP[1], WORLD_UP[2]);
    this.camera.lookAt(orbit.target[0], orbit.target[1], orbit.target[2]);
    this.renderer.render(this.scene, this.camera);
  }
}
