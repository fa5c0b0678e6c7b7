"""
Agente de aprendizado de um sub-arranjo: TD3 com quantizador + knn e DDPG

O estado de cada passo é a ação do passo anterior (vetor de índices de fase).
A ação contínua do ator é quantizada, os k vizinhos mais próximos são reunidos
e o candidato de maior Q é aplicado. Os críticos recebem a ação como fase
contínua em [-π, π]; ações guardadas no buffer são convertidas pelo codebook.
"""
import math
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from beamforming.codebook import BeamVector, PhaseCodebook, quantize_phases
from utils.exceptions import NumericalError
from utils.logger import setup_logger
from utils.seeding import SeedStreams, generator_state, restore_generator
from .checkpoint import load_checkpoint, save_checkpoint
from .knn import best_of_knn, knn
from .networks import AdamOptimizer, DenseNet, build_actor, build_critic, soft_update

logger = setup_logger(__name__)

PowerMeter = Callable[[BeamVector], float]


class AgentVariant(str, Enum):
    TD3 = "td3"
    DDPG = "ddpg"


@dataclass(frozen=True)
class TD3Hyper:
    gamma: float = 0.99
    tau: float = 0.005
    batch_size: int = 64
    buffer_capacity: int = 50000
    actor_period: int = 1
    target_period: int = 3
    explore_var: float = 0.5
    explore_decay: float = 1e-5
    explore_min: float = 1e-3
    target_var: float = 0.1
    target_decay: float = 1e-4
    knn_k: int = 8
    knn_wrap: bool = False
    actor_lr: float = 1e-3
    critic_lr: float = 2e-3

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma deve estar em (0, 1), recebido {self.gamma}")
        if not 0 < self.tau <= 1:
            raise ValueError(f"tau deve estar em (0, 1], recebido {self.tau}")
        if not self.target_period > self.actor_period >= 1:
            raise ValueError("períodos devem satisfazer target_period > actor_period >= 1")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("buffer_capacity deve ser >= batch_size >= 1")
        if min(self.explore_var, self.explore_min, self.target_var, self.explore_decay, self.target_decay) < 0:
            raise ValueError("variâncias e taxas de decaimento não podem ser negativas")
        if self.knn_k < 1:
            raise ValueError("knn_k deve ser >= 1")

    def explore_variance(self, step: int) -> float:
        """Decaimento linear por passo, limitado inferiormente por explore_min"""
        return max(self.explore_var - self.explore_decay * step, self.explore_min)

    def target_variance(self, step: int) -> float:
        return max(self.target_var - self.target_decay * step, 0.0)


@dataclass(frozen=True)
class Experience:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray


@dataclass
class Minibatch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray

    def __len__(self) -> int:
        return self.rewards.size


class ReplayBuffer:
    """Buffer circular com amostragem uniforme sem reposição"""

    def __init__(self, capacity: int, n: int):
        if capacity < 1:
            raise ValueError("capacidade deve ser >= 1")
        self.capacity = int(capacity)
        self.states = np.zeros((capacity, n), dtype=np.int64)
        self.actions = np.zeros((capacity, n), dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.next_states = np.zeros((capacity, n), dtype=np.int64)
        self.size = 0
        self.position = 0

    def __len__(self) -> int:
        return self.size

    def add(self, exp: Experience) -> None:
        i = self.position
        self.states[i] = exp.state
        self.actions[i] = exp.action
        self.rewards[i] = exp.reward
        self.next_states[i] = exp.next_state
        self.position = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, k: int, rng: np.random.Generator) -> Minibatch:
        if self.size < k:
            raise ValueError(f"buffer com {self.size} experiências, minibatch de {k}")
        rows = rng.choice(self.size, size=k, replace=False)
        return Minibatch(
            self.states[rows], self.actions[rows], self.rewards[rows], self.next_states[rows]
        )

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return {
            "buffer_states": self.states[: self.size].copy(),
            "buffer_actions": self.actions[: self.size].copy(),
            "buffer_rewards": self.rewards[: self.size].copy(),
            "buffer_next_states": self.next_states[: self.size].copy(),
        }


@dataclass
class StepReport:
    step: int
    action: BeamVector
    power: float
    reward: float
    loss_q1: float = math.nan
    loss_q2: float = math.nan
    sigma_explore: float = 0.0
    updated: bool = False

    def to_row(self, target: float) -> Dict[str, float]:
        """Linha da curva de aprendizado"""
        return {
            "step": self.step,
            "power_w": self.power,
            "power_frac_of_target": self.power / target if target > 0 else math.nan,
            "reward": self.reward,
            "loss_q1": self.loss_q1,
            "loss_q2": self.loss_q2,
            "sigma_explore": self.sigma_explore,
        }


def compute_reward(p_now: float, p_prev: float) -> float:
    """+1 se a potência aumentou estritamente, -1 caso contrário (empate inclusive)"""
    if not (math.isfinite(p_now) and math.isfinite(p_prev)):
        raise NumericalError(f"potência não finita: {p_now}, {p_prev}")
    return 1.0 if p_now > p_prev else -1.0


class TD3Agent:
    def __init__(
        self,
        n: int,
        codebook: PhaseCodebook,
        hyper: Optional[TD3Hyper] = None,
        variant: Union[AgentVariant, str] = AgentVariant.TD3,
        streams: Optional[SeedStreams] = None,
        module: int = 0,
    ):
        if n < 1:
            raise ValueError("o agente precisa de pelo menos um elemento")
        self.n = int(n)
        self.codebook = codebook
        self.hyper = hyper or TD3Hyper()
        self.variant = AgentVariant(variant)
        self.module = int(module)
        streams = streams or SeedStreams(0)

        init_rng = streams.stream("init", module)
        self.explore_rng = streams.stream("explore", module)
        self.knn_rng = streams.stream("knn", module)
        self.batch_rng = streams.stream("minibatch", module)
        self.target_rng = streams.stream("target", module)

        levels = codebook.size
        self.actor = build_actor(self.n, levels, init_rng)
        self.critic1 = build_critic(self.n, levels, init_rng)
        self.critic2 = build_critic(self.n, levels, init_rng) if self.twin else None
        self.actor_target = self.actor.copy()
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy() if self.twin else None

        self.actor_opt = AdamOptimizer(lr=self.hyper.actor_lr)
        self.critic1_opt = AdamOptimizer(lr=self.hyper.critic_lr)
        self.critic2_opt = AdamOptimizer(lr=self.hyper.critic_lr) if self.twin else None

        self.buffer = ReplayBuffer(self.hyper.buffer_capacity, self.n)
        self.state = BeamVector(init_rng.integers(levels, size=self.n), codebook.bits)
        self.prev_power: Optional[float] = None
        self.best_power: Optional[float] = None
        self.best_action: Optional[BeamVector] = None
        self.step_count = 0
        self.critic_calls = {"q1": 0, "q2": 0}

    @property
    def twin(self) -> bool:
        return self.variant is AgentVariant.TD3

    @property
    def target_period(self) -> int:
        return self.hyper.target_period if self.twin else 1

    def _networks(self) -> Dict[str, DenseNet]:
        nets = {
            "actor": self.actor,
            "actor_target": self.actor_target,
            "critic1": self.critic1,
            "critic1_target": self.critic1_target,
        }
        if self.twin:
            nets["critic2"] = self.critic2
            nets["critic2_target"] = self.critic2_target
        return nets

    def _optimizers(self) -> Dict[str, AdamOptimizer]:
        opts = {"actor": self.actor_opt, "critic1": self.critic1_opt}
        if self.twin:
            opts["critic2"] = self.critic2_opt
        return opts

    def q_value(self, states: np.ndarray, action_phases: np.ndarray, target: bool = False) -> np.ndarray:
        """min(Q1, Q2) para TD3, Q1 para DDPG"""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        action_phases = np.atleast_2d(np.asarray(action_phases, dtype=np.float64))
        critic1 = self.critic1_target if target else self.critic1
        self.critic_calls["q1"] += 1
        q = critic1.forward(states, action_phases)[:, 0]
        if self.twin:
            critic2 = self.critic2_target if target else self.critic2
            self.critic_calls["q2"] += 1
            q = np.minimum(q, critic2.forward(states, action_phases)[:, 0])
        return q

    def select_action(self, state: BeamVector, step: int) -> BeamVector:
        variance = self.hyper.explore_variance(step)
        noisy = self.actor.forward(state.indices) + self.explore_rng.normal(0.0, math.sqrt(variance), self.n)
        quantized = quantize_phases(np.clip(noisy, -np.pi, np.pi), self.codebook)

        neighbors = knn(quantized, self.hyper.knn_k, self.codebook, self.knn_rng, self.hyper.knn_wrap)
        candidates = [quantized] + neighbors.vectors

        def scorer(indices: np.ndarray) -> np.ndarray:
            states = np.tile(state.indices, (len(indices), 1))
            return self.q_value(states, self.codebook.action_phase(indices))

        return best_of_knn(candidates, scorer)

    def td_target(self, batch: Minibatch, step: int) -> np.ndarray:
        next_actions = self.actor_target.forward(batch.next_states)
        if self.twin:
            noise = self.target_rng.normal(0.0, math.sqrt(self.hyper.target_variance(step)), next_actions.shape)
            next_actions = np.clip(next_actions + noise, -np.pi, np.pi)
        q_next = self.q_value(batch.next_states, next_actions, target=True)
        return batch.rewards + self.hyper.gamma * q_next

    def critic_update(self, batch: Minibatch, y: np.ndarray) -> Tuple[float, float]:
        action_phases = self.codebook.action_phase(batch.actions)
        pairs = [(self.critic1, self.critic1_opt)]
        if self.twin:
            pairs.append((self.critic2, self.critic2_opt))

        losses = []
        for critic, opt in pairs:
            q = critic.forward(batch.states, action_phases)[:, 0]
            diff = q - y
            loss = float(np.mean(diff**2))
            if not math.isfinite(loss):
                logger.error(f"Perda não finita no crítico do módulo {self.module}")
                raise NumericalError("perda do crítico não finita")
            grads, _ = critic.gradients(batch.states, action_phases, upstream=(2.0 * diff / len(y))[:, None])
            opt.step(critic.params, grads)
            losses.append(loss)
        return losses[0], losses[1] if self.twin else math.nan

    def actor_update(self, batch: Minibatch) -> float:
        """Um passo de subida em (1/K)·Σ min_i Q_i(s, π(s)); retorna o objetivo antes do passo"""
        k = len(batch)
        actions = self.actor.forward(batch.states)
        weight = np.full((k, 1), 1.0 / k)

        q1 = self.critic1.forward(batch.states, actions)[:, 0]
        if self.twin:
            q2 = self.critic2.forward(batch.states, actions)[:, 0]
            use_first = q1 <= q2
            objective = float(np.mean(np.where(use_first, q1, q2)))
            _, (_, grad1) = self.critic1.gradients(batch.states, actions, upstream=weight * use_first[:, None])
            _, (_, grad2) = self.critic2.gradients(batch.states, actions, upstream=weight * ~use_first[:, None])
            action_grad = grad1 + grad2
        else:
            objective = float(np.mean(q1))
            _, (_, action_grad) = self.critic1.gradients(batch.states, actions, upstream=weight)

        grads, _ = self.actor.gradients(batch.states, upstream=-action_grad)
        self.actor_opt.step(self.actor.params, grads)
        return objective

    def update_targets(self) -> None:
        tau = self.hyper.tau
        soft_update(self.actor_target, self.actor, tau)
        soft_update(self.critic1_target, self.critic1, tau)
        if self.twin:
            soft_update(self.critic2_target, self.critic2, tau)

    def _track(self, action: BeamVector, power: float) -> None:
        if self.best_power is None or power > self.best_power:
            self.best_power = power
            self.best_action = action

    def train_step(self, env_measure: PowerMeter, step: Optional[int] = None) -> StepReport:
        step = self.step_count if step is None else step
        if self.prev_power is None:
            self.prev_power = float(env_measure(self.state))
            self._track(self.state, self.prev_power)

        action = self.select_action(self.state, step)
        power = float(env_measure(action))
        reward = compute_reward(power, self.prev_power)
        self.buffer.add(Experience(self.state.indices, action.indices, reward, action.indices))
        self.step_count += 1

        report = StepReport(
            step=step,
            action=action,
            power=power,
            reward=reward,
            sigma_explore=math.sqrt(self.hyper.explore_variance(step)),
        )
        if len(self.buffer) >= self.hyper.batch_size:
            batch = self.buffer.sample(self.hyper.batch_size, self.batch_rng)
            y = self.td_target(batch, step)
            report.loss_q1, report.loss_q2 = self.critic_update(batch, y)
            if self.step_count % self.hyper.actor_period == 0:
                self.actor_update(batch)
            if self.step_count % self.target_period == 0:
                self.update_targets()
            report.updated = True

        self.state = action
        self.prev_power = power
        self._track(action, power)
        return report

    def save(self, path: Union[str, Path], include_buffer: bool = False) -> str:
        meta = {
            "n": self.n,
            "bits": self.codebook.bits,
            "variant": self.variant.value,
            "module": self.module,
            "hyper": asdict(self.hyper),
            "step_count": self.step_count,
            "state": self.state.to_dict(),
            "prev_power": self.prev_power,
            "best_power": self.best_power,
            "best_action": self.best_action.to_dict() if self.best_action is not None else None,
            "rng": {
                "explore": generator_state(self.explore_rng),
                "knn": generator_state(self.knn_rng),
                "minibatch": generator_state(self.batch_rng),
                "target": generator_state(self.target_rng),
            },
            "buffer": {"included": include_buffer, "size": self.buffer.size, "position": self.buffer.position},
        }
        arrays = self.buffer.to_arrays() if include_buffer else None
        return save_checkpoint(path, self._networks(), self._optimizers(), meta, arrays)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TD3Agent":
        networks, optimizers, meta, arrays = load_checkpoint(path)
        agent = cls(
            meta["n"],
            PhaseCodebook(meta["bits"]),
            TD3Hyper(**meta["hyper"]),
            meta["variant"],
            module=meta["module"],
        )
        for name, net in networks.items():
            setattr(agent, name, net)
        agent.actor_opt = optimizers["actor"]
        agent.critic1_opt = optimizers["critic1"]
        if agent.twin:
            agent.critic2_opt = optimizers["critic2"]

        agent.step_count = meta["step_count"]
        agent.state = BeamVector.from_dict(meta["state"])
        agent.prev_power = meta["prev_power"]
        agent.best_power = meta["best_power"]
        if meta["best_action"] is not None:
            agent.best_action = BeamVector.from_dict(meta["best_action"])
        agent.explore_rng = restore_generator(meta["rng"]["explore"])
        agent.knn_rng = restore_generator(meta["rng"]["knn"])
        agent.batch_rng = restore_generator(meta["rng"]["minibatch"])
        agent.target_rng = restore_generator(meta["rng"]["target"])

        if meta["buffer"]["included"]:
            size = meta["buffer"]["size"]
            agent.buffer.states[:size] = arrays["buffer_states"]
            agent.buffer.actions[:size] = arrays["buffer_actions"]
            agent.buffer.rewards[:size] = arrays["buffer_rewards"]
            agent.buffer.next_states[:size] = arrays["buffer_next_states"]
            agent.buffer.size = size
            agent.buffer.position = meta["buffer"]["position"]
        logger.info(f"Agente do módulo {agent.module} restaurado no passo {agent.step_count}")
        return agent
