from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Etiqueta la participación sostenida por (repositorio, contribuidor) y escribe labels.csv'
    stage = "label"

    def summarize(self, run):
        for status, n in run.manifest["labels"].items():
            self.stdout.write(f"{status}: {n}")
        if run.unlabeled:
            self.stdout.write(self.style.WARNING(f"sin etiqueta (sin commits): {len(run.unlabeled)}"))
