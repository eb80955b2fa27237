import numpy as np
import pytest

from flava.geometry import Box3D, Calibration, Category


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Print one PASS/FAIL line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or not item.module.__name__.endswith("test_acceptance"):
        return
    label = (item.function.__doc__ or item.name).strip().splitlines()[0]
    status = "PASS" if report.passed else "FAIL"
    terminal = item.config.pluginmanager.get_plugin("terminalreporter")
    if terminal is not None:
        terminal.write_line(f"ACCEPTANCE {status}: {label}")

# Calibration text with realistic magnitudes (focal ~721 px, velodyne axes
# rotated into the camera). Extra keys mimic full files and must be ignored.
REALISTIC_CALIB_TEXT = """\
P0: 7.215377e+02 0.000000e+00 6.095593e+02 0.000000e+00 0.000000e+00 7.215377e+02 1.728540e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00
P1: 7.215377e+02 0.000000e+00 6.095593e+02 -3.875744e+02 0.000000e+00 7.215377e+02 1.728540e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00
P2: 7.215377e+02 0.000000e+00 6.095593e+02 4.485728e+01 0.000000e+00 7.215377e+02 1.728540e+02 2.163791e-01 0.000000e+00 0.000000e+00 1.000000e+00 2.745884e-03
P3: 7.215377e+02 0.000000e+00 6.095593e+02 -3.395242e+02 0.000000e+00 7.215377e+02 1.728540e+02 2.199936e+00 0.000000e+00 0.000000e+00 1.000000e+00 2.729905e-03
R0_rect: 9.999239e-01 9.837760e-03 -7.445048e-03 -9.869795e-03 9.999421e-01 -4.278459e-03 7.402527e-03 4.351614e-03 9.999631e-01
Tr_velo_to_cam: 7.533745e-03 -9.999714e-01 -6.166020e-04 -4.069766e-03 1.480249e-02 7.280733e-04 -9.998902e-01 -7.631618e-02 9.998621e-01 7.523790e-03 1.480755e-02 -2.717806e-01
Tr_imu_to_velo: 9.999976e-01 7.553071e-04 -2.035826e-03 -8.086759e-01 -7.854027e-04 9.998898e-01 -1.482298e-02 3.195559e-01 2.024406e-03 1.482454e-02 9.998881e-01 -7.997231e-01
"""


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_calibration(rng: np.random.Generator) -> Calibration:
    focal = rng.uniform(400.0, 1200.0)
    p_rect = np.array([
        [focal, 0.0, rng.uniform(400, 800), rng.uniform(-50, 50)],
        [0.0, focal, rng.uniform(100, 300), rng.uniform(-5, 5)],
        [0.0, 0.0, 1.0, rng.uniform(-0.01, 0.01)],
    ])
    r_rect = np.eye(4)
    r_rect[:3, :3] = random_rotation(rng)
    t = np.eye(4)
    t[:3, :3] = random_rotation(rng)
    t[:3, 3] = rng.uniform(-1.0, 1.0, size=3)
    return Calibration(p_rect=p_rect, r_rect=r_rect, t_velo_cam=t)


def random_box(rng: np.random.Generator, category=Category.CAR,
               track_id: int = 0) -> Box3D:
    return Box3D(
        x=rng.uniform(-30, 30),
        y=rng.uniform(-30, 30),
        z=rng.uniform(-2, 2),
        length=rng.uniform(0.5, 6.0),
        width=rng.uniform(0.4, 3.0),
        height=rng.uniform(0.5, 3.0),
        yaw=rng.uniform(-np.pi, np.pi),
        category=category,
        track_id=track_id,
    )


def write_cloud(path, points: np.ndarray) -> None:
    np.asarray(points, dtype="<f4").reshape(-1, 4).tofile(path)


def make_sequence_dir(root, seq_id: str, n_frames: int = 3,
                      points_per_frame: int = 500, seed: int = 0,
                      with_images: bool = True):
    """Build a synthetic on-disk sequence: forward-biased cloud, realistic
    calibration, opaque image bytes."""
    rng = np.random.default_rng(seed)
    seq_dir = root / seq_id
    (seq_dir / "velodyne").mkdir(parents=True)
    (seq_dir / "calib.txt").write_text(REALISTIC_CALIB_TEXT)
    if with_images:
        (seq_dir / "image_2").mkdir()
    for i in range(n_frames):
        pts = np.column_stack([
            rng.uniform(2.0, 40.0, points_per_frame),
            rng.uniform(-15.0, 15.0, points_per_frame),
            rng.uniform(-2.0, 2.0, points_per_frame),
            rng.uniform(0.0, 1.0, points_per_frame),
        ])
        write_cloud(seq_dir / "velodyne" / f"{i:06d}.bin", pts)
        if with_images:
            (seq_dir / "image_2" / f"{i:06d}.png").write_bytes(
                b"\x89PNG-fake-" + bytes([i]) * 16)
    return seq_dir


@pytest.fixture
def realistic_calib(tmp_path):
    from flava.kitti_io import load_calibration

    path = tmp_path / "calib.txt"
    path.write_text(REALISTIC_CALIB_TEXT)
    return load_calibration(path)


@pytest.fixture
def data_root(tmp_path):
    root = tmp_path / "data"
    root.mkdir()
    make_sequence_dir(root, "seq_a", n_frames=3, seed=1)
    make_sequence_dir(root, "seq_b", n_frames=5, seed=2)
    return root
