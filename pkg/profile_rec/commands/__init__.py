from profile_rec.commands.data import register as register_data
from profile_rec.commands.evaluation import register as register_evaluation
from profile_rec.commands.profiles import register as register_profiles
from profile_rec.commands.retrieval import register as register_retrieval
from profile_rec.commands.training import register as register_training
