from ps_app.reports import render_repository_table

from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Calcula el índice PS (PR, contribuidor, repositorio) y escribe los CSV'
    stage = "index"

    def summarize(self, run):
        self.stdout.write(render_repository_table(run.summary.repository_index))
