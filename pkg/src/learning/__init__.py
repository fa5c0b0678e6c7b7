"""Agentes TD3/DDPG, redes densas e busca de vizinhos quantizados"""
from .agent import AgentVariant, Experience, ReplayBuffer, StepReport, TD3Agent, TD3Hyper, compute_reward
from .knn import NeighborList, best_of_knn, knn, knn_bruteforce
from .networks import AdamOptimizer, DenseNet, adam_step, build_actor, build_critic, soft_update
