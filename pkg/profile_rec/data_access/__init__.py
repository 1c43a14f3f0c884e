from profile_rec.data_access.checkpoints import (
    Checkpoint,
    load_cf,
    load_encoder,
    read_checkpoint,
    save_cf,
    save_encoder,
    write_checkpoint,
)
from profile_rec.data_access.corpus import (
    ALL_INTERACTIONS_FILE,
    ITEMS_FILE,
    USERS_FILE,
    CorpusStore,
    load_corpus,
    read_interactions,
    read_items,
    read_users,
    split_file,
    write_interactions,
    write_items,
    write_users,
)
from profile_rec.data_access.embeddings import read_store, write_store
from profile_rec.data_access.manifest import MANIFEST_FILE, Manifest, write_manifest
from profile_rec.data_access.progress import append_progress, progress_file, read_progress
from profile_rec.data_access.training_log import TrainingLog, read_reports
from profile_rec.data_access.transcripts import append_transcript, read_transcript
from profile_rec.data_access.vocab import read_vocab, write_vocab
