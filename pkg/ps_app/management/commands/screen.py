from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Cribado de predictores (asimetría, log1p, desbalance) y screening_report.json'
    stage = "screen"

    def summarize(self, run):
        self.stdout.write(run.screening.render())
