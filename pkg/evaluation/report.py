import numpy as np

from utils.misc import simple_table


class EvalReport():
    """Per-query scores and their mean for one benchmark protocol."""

    def __init__(self, protocol, per_query, num_junk_skipped=0, config=None):
        """
        Args:
            protocol (str): 'oxford', 'holidays' or 'ukb'.
            per_query (list of (str, float)): Query id and score, in the
                order the queries were evaluated.
            num_junk_skipped (int): Junk items removed from rankings.
            config (dict, optional): Settings echoed in the output.
        """
        self.protocol = protocol
        self.per_query = list(per_query)
        self.num_junk_skipped = num_junk_skipped
        self.config = dict(config or {})

    @property
    def num_queries(self):
        return len(self.per_query)

    @property
    def aggregate(self):
        if not self.per_query:
            return float('nan')
        return float(np.mean([score for _, score in self.per_query]))

    @property
    def metric_name(self):
        return 'ukb_score' if self.protocol == 'ukb' else 'mAP'

    def to_tsv(self):
        lines = ['query\t%s\t%.9g' % (query_id, score)
                 for query_id, score in self.per_query]
        lines.append('aggregate\t%s\t%.9g' % (self.protocol, self.aggregate))
        return '\n'.join(lines) + '\n'

    def to_text(self):
        rows = [('Query', self.metric_name)]
        rows += [(query_id, '{:.4f}'.format(score))
                 for query_id, score in self.per_query]
        output = simple_table(rows) + '\n\n'
        for key in sorted(self.config):
            output += '%s: %s\n' % (key, self.config[key])
        output += 'Queries: %s\n' % self.num_queries
        if self.protocol == 'oxford':
            output += 'Junk items skipped: %s\n' % self.num_junk_skipped
        output += '%s %s: %.4f\n' % (self.protocol, self.metric_name,
                                     self.aggregate)
        return output

    def format(self, output_format):
        if output_format == 'tsv':
            return self.to_tsv()
        elif output_format == 'text':
            return self.to_text()
        raise ValueError('Unknown format: %s' % output_format)

    def summary_row(self, label):
        return '%s\t%s\t%.6f' % (label, self.protocol, self.aggregate)
