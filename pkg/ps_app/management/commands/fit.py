from ps_app.reports import render_models_table

from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Ajusta los modelos logísticos pedidos y escribe model_<k>.json'
    stage = "fit"

    def summarize(self, run):
        fits = [run.fits[k] for k in sorted(run.fits)]
        self.stdout.write(render_models_table(fits))
