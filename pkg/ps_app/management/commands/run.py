from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Ejecuta todas las etapas: ingest, cues, screen, label, index, fit, report'
    stage = "report"

    def summarize(self, run):
        self.stdout.write(run.rendered)
