/**
 * three.js scene for the avatar: quad body, rotor disks, 3 arm links posed by
 * forward kinematics, payload indicator, ghost marker, ground grid.
 *
 * World mapping NED -> three (y-up): (x_t, y_t, z_t) = (E, -D, -N), i.e.
 * three.x = ned.y, three.y = -ned.z, three.z = -ned.x (right-handed).
 */

import * as THREE from "three";

import { armLinkPoints, DEFAULT_ARM } from "./kinematics.js";
import type { Vec3 } from "./protocol.js";
import { eulerToRotation, Mat3 } from "./so3.js";

export type CameraMode = "chase" | "free";

function nedToThree(p: Vec3): THREE.Vector3 {
  return new THREE.Vector3(p[1], -p[2], -p[0]);
}

/** Rotation conjugated into the three basis: R_t = C R C^T. */
function nedRotToThree(r: Mat3): THREE.Matrix4 {
  // C rows express three axes in NED: x_t=E, y_t=-D, z_t=-N
  const c = [0, 1, 0, 0, 0, -1, -1, 0, 0];
  const tmp = new Array(9).fill(0);
  const out = new Array(9).fill(0);
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      let s = 0;
      for (let k = 0; k < 3; k++) s += c[3 * i + k] * r[3 * k + j];
      tmp[3 * i + j] = s;
    }
  }
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      let s = 0;
      for (let k = 0; k < 3; k++) s += tmp[3 * i + k] * c[3 * j + k];
      out[3 * i + j] = s;
    }
  }
  const m = new THREE.Matrix4();
  m.set(out[0], out[1], out[2], 0,
        out[3], out[4], out[5], 0,
        out[6], out[7], out[8], 0,
        0, 0, 0, 1);
  return m;
}

export class CockpitView {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  cameraMode: CameraMode = "chase";

  private vehicle = new THREE.Group();
  private armSegments: THREE.Mesh[] = [];
  private payloadBall: THREE.Mesh;
  private ghost: THREE.Group;
  private bodyMaterial: THREE.MeshStandardMaterial;
  private renderer: THREE.WebGLRenderer | null = null;

  constructor(canvas?: HTMLCanvasElement) {
    this.camera = new THREE.PerspectiveCamera(55, 16 / 9, 0.05, 100);
    this.scene.background = new THREE.Color(0x10131a);

    const sun = new THREE.DirectionalLight(0xffffff, 2.0);
    sun.position.set(4, 8, 2);
    this.scene.add(sun, new THREE.AmbientLight(0x8899bb, 0.8));
    this.scene.add(new THREE.GridHelper(20, 40, 0x335577, 0x223344));

    // vehicle: flat box + four rotor disks on arms
    this.bodyMaterial = new THREE.MeshStandardMaterial({ color: 0xd8dde8 });
    const hub = new THREE.Mesh(new THREE.BoxGeometry(0.22, 0.06, 0.22), this.bodyMaterial);
    this.vehicle.add(hub);
    const rotorGeom = new THREE.CylinderGeometry(0.09, 0.09, 0.012, 20);
    for (const [dx, dz] of [[0.18, 0.18], [0.18, -0.18], [-0.18, 0.18], [-0.18, -0.18]]) {
      const rotor = new THREE.Mesh(rotorGeom, this.bodyMaterial);
      rotor.position.set(dx, 0.03, dz);
      this.vehicle.add(rotor);
      const strut = new THREE.Mesh(
        new THREE.BoxGeometry(Math.hypot(dx, dz), 0.02, 0.03), this.bodyMaterial);
      strut.position.set(dx / 2, 0, dz / 2);
      strut.rotation.y = -Math.atan2(dz, dx);
      this.vehicle.add(strut);
    }
    // nose marker so yaw reads at a glance (NED +x = three -z)
    const nose = new THREE.Mesh(new THREE.ConeGeometry(0.04, 0.1, 12),
                                new THREE.MeshStandardMaterial({ color: 0xff5533 }));
    nose.rotation.x = -Math.PI / 2;
    nose.position.set(0, 0, -0.17);
    this.vehicle.add(nose);

    const linkMat = new THREE.MeshStandardMaterial({ color: 0xffaa33 });
    for (let i = 0; i < 3; i++) {
      const seg = new THREE.Mesh(new THREE.CylinderGeometry(0.012, 0.012, 1, 10), linkMat);
      this.armSegments.push(seg);
      this.vehicle.add(seg);
    }
    this.payloadBall = new THREE.Mesh(
      new THREE.SphereGeometry(0.035, 16, 12),
      new THREE.MeshStandardMaterial({ color: 0x44dd66 }));
    this.payloadBall.visible = false;
    this.vehicle.add(this.payloadBall);
    this.scene.add(this.vehicle);

    // ghost marker: where the operator asked the robot to go
    this.ghost = new THREE.Group();
    const ghostMat = new THREE.MeshBasicMaterial({ color: 0x55ccff, transparent: true, opacity: 0.35 });
    this.ghost.add(new THREE.Mesh(new THREE.SphereGeometry(0.08, 16, 12), ghostMat));
    const ghostNose = new THREE.Mesh(new THREE.ConeGeometry(0.03, 0.1, 10), ghostMat);
    ghostNose.rotation.x = -Math.PI / 2;
    ghostNose.position.z = -0.14;
    this.ghost.add(ghostNose);
    this.scene.add(this.ghost);

    if (canvas) {
      this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    }
  }

  resize(width: number, height: number): void {
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
    this.renderer?.setSize(width, height, false);
  }

  /** Apply one twin snapshot; cheap enough to call every animation frame. */
  update(position: Vec3, euler: Vec3, joints: Vec3, payload: boolean,
         stale: boolean, ghostPos: Vec3, ghostYaw: number): void {
    this.vehicle.position.copy(nedToThree(position));
    const rot = nedRotToThree(eulerToRotation(euler));
    this.vehicle.setRotationFromMatrix(rot);

    const pts = armLinkPoints(joints, DEFAULT_ARM).map(nedToThree);
    for (let i = 0; i < 3; i++) {
      const a = pts[i], b = pts[i + 1];
      const seg = this.armSegments[i];
      const mid = a.clone().add(b).multiplyScalar(0.5);
      const dir = b.clone().sub(a);
      const len = Math.max(dir.length(), 1e-6);
      seg.position.copy(mid);
      seg.scale.set(1, len, 1);
      seg.quaternion.setFromUnitVectors(new THREE.Vector3(0, 1, 0), dir.normalize());
    }
    this.payloadBall.visible = payload;
    this.payloadBall.position.copy(pts[3]);

    this.bodyMaterial.color.setHex(stale ? 0x666a75 : 0xd8dde8);
    this.bodyMaterial.opacity = stale ? 0.6 : 1.0;
    this.bodyMaterial.transparent = stale;

    this.ghost.position.copy(nedToThree(ghostPos));
    this.ghost.setRotationFromMatrix(nedRotToThree(eulerToRotation([0, 0, ghostYaw])));

    if (this.cameraMode === "chase") {
      const anchor = this.vehicle.position;
      this.camera.position.lerp(
        anchor.clone().add(new THREE.Vector3(1.6, 1.1, 1.6)), 0.08);
      this.camera.lookAt(anchor);
    } else {
      this.camera.position.set(4.5, 3.0, 4.5);
      this.camera.lookAt(0, 0.8, 0);
    }
  }

  render(): void {
    this.renderer?.render(this.scene, this.camera);
  }
}
