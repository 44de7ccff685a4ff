from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Calcula las 13 señales por PR y escribe cues.csv'
    stage = "cues"

    def summarize(self, run):
        self.stdout.write(f"{len(run.cue_map)} PRs; tabla de emojis {run.emoji_table.version}")
