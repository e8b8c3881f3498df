import numpy.testing as npt

from asem.reports import (
    comparison_csv,
    comparison_markdown,
    epoch_metrics_csv,
    format_mean_std,
    format_percent,
    recall_report_csv,
    recall_report_table,
)
from asem.retrieval import RecallReport
from asem.train import EpochMetrics, RunReport, SeedRun


def make_run_report(objective="nt-xent", batch_size=32, failed=False):
    if failed:
        runs = (SeedRun(0, "BatchTooSmallError: b=1", None, None, ()),)
        return RunReport(objective, batch_size, runs, None)
    report = RecallReport(0.1992, 0.35, 0.5, 0.25, 0.45, 0.65)
    runs = (SeedRun(0, None, 3, report, (1.0, 0.5)),)
    aggregates = tuple((v, 0.00235) for v in report.as_tuple())
    return RunReport(objective, batch_size, runs, aggregates)


class TestFormatting:
    def test_percent_one_decimal(self):
        assert format_percent(0.1992) == "19.9"
        assert format_percent(1.0) == "100.0"
        assert format_percent(0.0) == "0.0"
        assert format_percent(0.005) == "0.5"

    def test_mean_std_cell(self):
        assert format_mean_std(0.1992, 0.00235) == "19.9±0.2"

    def test_zero_std_cell(self):
        assert format_mean_std(0.5, 0.0) == "50.0±0.0"

    def test_hand_checked_aggregate_cell(self):
        # mean/std of {0.1, 0.2, 0.3} -> 20.0 +- 8.2 percent
        from asem.train import mean_std

        m, s = mean_std([0.1, 0.2, 0.3])
        assert format_mean_std(m, s) == "20.0±8.2"


class TestRecallReportEmission:
    REPORT = RecallReport(0.002, 0.01, 0.021, 0.5, 0.75, 1.0)

    def test_csv_exact(self):
        assert recall_report_csv(self.REPORT) == (
            "direction,r1,r5,r10\n"
            "t2a,0.002,0.01,0.021\n"
            "a2t,0.5,0.75,1.0\n"
        )

    def test_csv_round_trips_floats(self):
        body = recall_report_csv(self.REPORT).splitlines()[1:]
        values = [float(v) for line in body for v in line.split(",")[1:]]
        npt.assert_array_equal(values, list(self.REPORT.as_tuple()))

    def test_table_alignment(self):
        table = recall_report_table(self.REPORT)
        lines = table.splitlines()
        assert lines[0].split() == ["Direction", "R@1", "R@5", "R@10"]
        assert lines[1].startswith("text-to-audio")
        assert lines[2].startswith("audio-to-text")
        assert "50.0" in lines[2] and "100.0" in lines[2]
        # columns align: every R@1 cell ends at the same offset
        assert len(lines[1]) == len(lines[2])


class TestEpochMetricsCsv:
    def test_round_trip(self):
        metrics = (
            EpochMetrics(0, 2.3025850929940457, 1.25, 1e-4),
            EpochMetrics(1, 1.5, 2.5, 1e-4),
        )
        text = epoch_metrics_csv(metrics)
        lines = text.splitlines()
        assert lines[0] == "epoch,train_loss,val_sum_of_recalls,lr"
        cells = lines[1].split(",")
        assert int(cells[0]) == 0
        assert float(cells[1]) == 2.3025850929940457
        assert float(cells[3]) == 1e-4


class TestComparisonEmission:
    def test_csv_columns_and_status(self):
        ok = make_run_report()
        bad = make_run_report(objective="triplet-weighted", failed=True)
        text = comparison_csv([ok, bad])
        lines = text.splitlines()
        assert lines[0] == (
            "batch_size,objective,direction,"
            "r1_mean,r1_std,r5_mean,r5_std,r10_mean,r10_std,seeds_ok,status"
        )
        assert lines[1].startswith("32,nt-xent,t2a,0.1992,0.00235,")
        assert lines[1].endswith(",1,ok")
        assert lines[3] == "32,triplet-weighted,t2a,,,,,,,0,n/c"

    def test_csv_deterministic(self):
        reports = [make_run_report(), make_run_report(objective="triplet-sum")]
        assert comparison_csv(reports) == comparison_csv(reports)

    def test_markdown_layout(self):
        ok = make_run_report()
        text = comparison_markdown([ok])
        lines = text.splitlines()
        assert lines[0] == "## Batch size 32"
        assert lines[2] == "| Objective | direction | R@1 | R@5 | R@10 |"
        assert lines[3] == "| --- | --- | --- | --- | --- |"
        assert lines[4] == "| nt-xent | t2a | 19.9±0.2 | 35.0±0.2 | 50.0±0.2 |"
        assert lines[5].startswith("| nt-xent | a2t | 25.0±0.2")

    def test_markdown_not_converged_cells(self):
        text = comparison_markdown([make_run_report(failed=True)])
        assert "| nt-xent | t2a | n/c | n/c | n/c |" in text

    def test_markdown_sections_per_batch_size(self):
        reports = [make_run_report(batch_size=32), make_run_report(batch_size=128)]
        text = comparison_markdown(reports)
        assert "## Batch size 32" in text
        assert "## Batch size 128" in text
        assert text.index("## Batch size 32") < text.index("## Batch size 128")
