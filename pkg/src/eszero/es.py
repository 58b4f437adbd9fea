"""Direct score maximization with distributed antithetic evolution strategies.

Every worker derives the full perturbation set from (master_seed, iteration)
and evaluates only its own antithetic pair; scalar deltas are allgathered,
and each worker reconstructs the identical pseudogradient by summing in
rank order, so parameters stay bitwise-synchronized without ever shipping
them.  The trainer never touches the backward pass: fitness is the episode
score, full stop.
"""

from __future__ import annotations

import socket
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .az import EpochMetrics, planning_loss
from .deepsets import unflatten
from .episode import Environment, rollout
from .mcts import SearchConfig, make_agent
from .optim import Optimizer
from .rng import derive_seed, make_rng


@dataclass(frozen=True)
class EsConfig:
    lr: float = 1e-2
    sigma: float = 0.1
    population: int = 8          # antithetic pairs = worker count
    episodes_per_eval: int = 2
    rank_shaping: bool = False   # centered-rank deltas, off by default

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.population < 1:
            raise ValueError("population must be at least 1")
        if self.episodes_per_eval < 1:
            raise ValueError("episodes_per_eval must be at least 1")


class EsProtocolError(RuntimeError):
    pass


class EsTimeoutError(RuntimeError):
    pass


def fitness(env: Environment, layout, x: np.ndarray, search: SearchConfig,
            episodes_per_eval: int, seed: int) -> float:
    """Mean episode score over search-in-the-loop rollouts; deterministic."""
    params = unflatten(x, layout)
    agent = make_agent(env, params, search)
    total = 0.0
    for i in range(episodes_per_eval):
        total += rollout(env, agent, derive_seed(seed, i)).score
    return total / episodes_per_eval


def perturbation(master_seed: int, iteration: int, rank: int, dim: int) -> np.ndarray:
    return make_rng(master_seed, "es-z", iteration, rank).standard_normal(dim)


def es_delta(env: Environment, layout, x: np.ndarray, z: np.ndarray, sigma: float,
             search: SearchConfig, episodes_per_eval: int, eval_seed: int) -> float:
    """f(x + sigma z) - f(x - sigma z), both sides on the same episode seeds."""
    f_plus = fitness(env, layout, x + sigma * z, search, episodes_per_eval, eval_seed)
    f_minus = fitness(env, layout, x - sigma * z, search, episodes_per_eval, eval_seed)
    delta = f_plus - f_minus
    if not np.isfinite(delta):
        raise ValueError(f"non-finite fitness delta {delta}")
    return delta


def centered_ranks(deltas: np.ndarray) -> np.ndarray:
    n = len(deltas)
    if n == 1:
        return np.zeros(1)
    ranks = np.empty(n)
    ranks[np.argsort(deltas)] = np.arange(n)
    return ranks / (n - 1) - 0.5


def pseudogradient(deltas: np.ndarray, sigma: float, master_seed: int,
                   iteration: int, dim: int) -> np.ndarray:
    """(1/(2 sigma |I|)) sum_i delta_i z_i, accumulated in ascending rank order."""
    g = np.zeros(dim)
    for rank, delta in enumerate(deltas):
        g += delta * perturbation(master_seed, iteration, rank, dim)
    return g / (2.0 * sigma * len(deltas))


# --- worker pools ---------------------------------------------------------


class InProcessPool:
    """Simulates all workers in one process; allgather is a table fill."""

    def __init__(self, population: int):
        self.population = population

    def my_ranks(self):
        return range(self.population)

    def allgather(self, iteration: int, mine: dict[int, float]) -> np.ndarray:
        if sorted(mine) != list(range(self.population)):
            raise EsProtocolError(f"expected deltas for all ranks, got {sorted(mine)}")
        return np.array([mine[r] for r in range(self.population)])

    def close(self):
        pass


_FRAME = struct.Struct("<QId")  # iteration u64, rank u32, delta f64
_LEN = struct.Struct("<I")


def pack_frame(iteration: int, rank: int, delta: float) -> bytes:
    payload = _FRAME.pack(iteration, rank, delta)
    payload += _LEN.pack(zlib.crc32(payload))
    return _LEN.pack(len(payload)) + payload


def unpack_frame(payload: bytes) -> tuple[int, int, float]:
    if len(payload) != _FRAME.size + _LEN.size:
        raise EsProtocolError(f"bad frame length {len(payload)}")
    body, crc = payload[:_FRAME.size], _LEN.unpack(payload[_FRAME.size:])[0]
    if zlib.crc32(body) != crc:
        raise EsProtocolError("frame checksum mismatch")
    iteration, rank, delta = _FRAME.unpack(body)
    return iteration, rank, delta


def _recv_exact(sock: socket.socket, n: int, rank: int, what: str) -> bytes:
    buf = b""
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except socket.timeout:
            raise EsTimeoutError(f"timed out waiting for {what} from worker {rank}")
        if not chunk:
            raise EsProtocolError(f"worker {rank} closed the connection mid-{what}")
        buf += chunk
    return buf


class TcpPool:
    """Full mesh of persistent sockets; one process per rank.

    Every pair of workers shares one bidirectional connection: each worker
    listens on its own address, connects to all lower ranks, and accepts
    from all higher ranks, identifying peers by a one-off rank handshake.
    """

    def __init__(self, rank: int, peers: list[str], timeout: float = 60.0):
        if not 0 <= rank < len(peers):
            raise ValueError(f"rank {rank} outside peer list of size {len(peers)}")
        self.rank = rank
        self.population = len(peers)
        self.timeout = timeout
        self._socks: dict[int, socket.socket] = {}
        host, port = peers[rank].rsplit(":", 1)
        server = socket.socket()
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind((host, int(port)))
        server.listen(self.population)
        server.settimeout(timeout)
        try:
            for peer in range(rank):
                ph, pp = peers[peer].rsplit(":", 1)
                sock = _connect_retry(ph, int(pp), timeout)
                sock.settimeout(timeout)
                sock.sendall(_LEN.pack(self.rank))
                self._socks[peer] = sock
            for _ in range(rank + 1, self.population):
                try:
                    sock, _ = server.accept()
                except socket.timeout:
                    missing = set(range(rank + 1, self.population)) - set(self._socks)
                    raise EsTimeoutError(f"workers {sorted(missing)} never connected")
                sock.settimeout(timeout)
                peer = _LEN.unpack(_recv_exact(sock, _LEN.size, -1, "handshake"))[0]
                if peer == self.rank or peer in self._socks or not 0 <= peer < self.population:
                    raise EsProtocolError(f"rank collision: two workers claim rank {peer}")
                self._socks[peer] = sock
        finally:
            server.close()

    def my_ranks(self):
        return (self.rank,)

    def allgather(self, iteration: int, mine: dict[int, float]) -> np.ndarray:
        if sorted(mine) != [self.rank]:
            raise EsProtocolError(f"worker {self.rank} must contribute exactly its own delta")
        frame = pack_frame(iteration, self.rank, mine[self.rank])
        for sock in self._socks.values():
            sock.sendall(frame)
        deltas = np.empty(self.population)
        deltas[self.rank] = mine[self.rank]
        for peer, sock in self._socks.items():
            n = _LEN.unpack(_recv_exact(sock, _LEN.size, peer, "frame header"))[0]
            if n != _FRAME.size + _LEN.size:
                raise EsProtocolError(f"worker {peer} sent frame of length {n}")
            it, rank, delta = unpack_frame(_recv_exact(sock, n, peer, "frame body"))
            if rank != peer:
                raise EsProtocolError(f"worker {peer} sent a frame claiming rank {rank}")
            if it != iteration:
                raise EsProtocolError(
                    f"worker {peer} is at iteration {it}, expected {iteration}")
            deltas[peer] = delta
        return deltas

    def close(self):
        for sock in self._socks.values():
            sock.close()
        self._socks.clear()


def _connect_retry(host: str, port: int, timeout: float) -> socket.socket:
    import time
    deadline = time.monotonic() + timeout
    while True:
        try:
            return socket.create_connection((host, port), timeout=timeout)
        except OSError:
            if time.monotonic() >= deadline:
                raise EsTimeoutError(f"could not reach worker at {host}:{port}")
            time.sleep(0.05)


# --- the training loop ----------------------------------------------------


def es_iteration(env: Environment, layout, opt: Optimizer, state, config: EsConfig,
                 search: SearchConfig, pool, master_seed: int, iteration: int):
    """One synchronized ES step; identical on every worker by construction."""
    x = opt.get_parameters(state)
    dim = x.shape[0]
    if pool.population != config.population:
        raise ValueError(
            f"pool has {pool.population} workers but config.population is {config.population}")
    mine = {}
    for rank in pool.my_ranks():
        z = perturbation(master_seed, iteration, rank, dim)
        eval_seed = derive_seed(master_seed, "es-eval", iteration, rank)
        mine[rank] = es_delta(env, layout, x, z, config.sigma, search,
                              config.episodes_per_eval, eval_seed)
    deltas = pool.allgather(iteration, mine)
    if config.rank_shaping:
        deltas = centered_ranks(deltas)
    g = pseudogradient(deltas, config.sigma, master_seed, iteration, dim)
    state = opt.update_state(state, -g, config.lr)  # optimizer minimizes; ascend

    params = unflatten(x, layout)
    agent = make_agent(env, params, search)
    center_seed = derive_seed(master_seed, "es-eval", iteration, "center")
    score = value = policy = 0.0
    for i in range(config.episodes_per_eval):
        ep = rollout(env, agent, derive_seed(center_seed, i))
        report, _ = planning_loss(ep, params, with_grad=False)
        score += ep.score
        value += report.value_loss
        policy += report.policy_loss
    n = config.episodes_per_eval
    return state, EpochMetrics(score / n, value / n, policy / n)


def es_train(env: Environment, layout, opt: Optimizer, x0: np.ndarray, epochs: int,
             config: EsConfig, search: SearchConfig, run_seed: int,
             pool) -> tuple[np.ndarray, list[EpochMetrics]]:
    state = opt.init(x0)
    rows = []
    for iteration in range(epochs):
        state, metrics = es_iteration(env, layout, opt, state, config, search,
                                      pool, run_seed, iteration)
        rows.append(metrics)
    return state.x, rows
