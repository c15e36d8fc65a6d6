"""Three-layer spiking network for detecting temporal spike patterns."""
from .coincidence import DetectionVerdict, Layer3Params, channel_spike_avg, detect, layer3_weight
from .config import ExperimentConfig, load_config
from .errors import (ConfigurationError, DomainError, IngestionError, NumericOverflowError,
                     SpikeseqError, TrainingError)
from .istdp import ISTDPParams, SynapseWeights, istdp_update, train_layer2
from .network import TrainedNetwork, detect_sample, detect_stream, train_network
from .neuron import NeuronParams, NeuronState, Synapse, run_train, step_neuron
from .patterns import PerturbationSpec, generate_pattern, perturb
from .reward import RewardProfile, RewardTrainConfig, apply_spike_selection, train_reward_profiles
from .spikes import SpikeEvent, SpikeTrain
from .window import WindowConfig, run_window

__version__ = "0.1.0"
