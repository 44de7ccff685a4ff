from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Carga, valida y filtra el corpus; escribe ingest_errors.jsonl y <out>/corpus/'
    stage = "ingest"

    def summarize(self, run):
        conteos = run.manifest["counts"]
        for etapa in ("loaded", "filtered"):
            c = conteos[etapa]
            self.stdout.write(
                f"{etapa}: {c['pulls']} PRs, {c['contributors']} contribuidores, {c['repos']} repositorios, "
                f"{c['commits']} commits, {c['ingest_errors']} errores"
            )
