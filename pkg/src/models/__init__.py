from .candidates import CandidateMaskSet, CandidateRecord, CandidateTracker, assignment_digest
from .embedding import MaskedEmbeddingTable, load_mask, save_mask, sparsity_budget
from .interactions import Interaction, InteractionDataset, Side, Split
from .manifest import RunManifest, StageStatus, run_id_for
from .search_state import STATE_DIM, SearchState, Transition

__all__ = [
    "CandidateMaskSet", "CandidateRecord", "CandidateTracker", "assignment_digest",
    "MaskedEmbeddingTable", "load_mask", "save_mask", "sparsity_budget",
    "Interaction", "InteractionDataset", "Side", "Split",
    "RunManifest", "StageStatus", "run_id_for",
    "STATE_DIM", "SearchState", "Transition",
]
