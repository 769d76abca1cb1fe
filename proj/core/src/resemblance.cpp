#include "gaze_attn/resemblance.hpp"

#include <algorithm>

#include "gaze_attn/align.hpp"
#include "gaze_attn/error.hpp"
#include "gaze_attn/parallel.hpp"

namespace gaze_attn {
namespace {

bool has_variance(const std::vector<double>& v) {
  return std::any_of(v.begin(), v.end(), [&](double x) { return x != v.front(); });
}

std::vector<const SentenceRecord*> sorted_records(const Corpus& corpus) {
  std::vector<const SentenceRecord*> records;
  for (const auto& r : corpus) records.push_back(&r);
  std::sort(records.begin(), records.end(),
            [](const SentenceRecord* a, const SentenceRecord* b) { return a->id < b->id; });
  return records;
}

std::vector<double> flattened_run(const AttentionRun& run, std::size_t layer, std::optional<std::size_t> head) {
  std::vector<std::vector<double>> parts;
  parts.reserve(run.sentences.size());
  for (const auto& [id, sentence] : run.sentences) {
    parts.push_back(lower_tri_flatten(resemblance_view(id, sentence, layer, head).matrix));
  }
  return concat_sentences(parts);
}

}  // namespace

std::vector<std::size_t> sentence_lengths(const Corpus& corpus) {
  std::vector<std::size_t> lengths;
  for (const auto* r : sorted_records(corpus)) lengths.push_back(r->n_words());
  return lengths;
}

SubjectVector build_subject_vector(const SaccadeBundle& bundle, const Corpus& corpus) {
  SubjectVector out;
  out.subject_id = bundle.subject_id;
  out.group = bundle.group;
  for (const auto* record : sorted_records(corpus)) {
    auto it = bundle.sentences.find(record->id);
    if (it == bundle.sentences.end()) {
      throw DataError("subject " + bundle.subject_id + " is missing sentence " + record->id.str());
    }
    const SaccadeMatrix& counts = it->second;
    if (counts.size() != record->n_words()) {
      throw DataError("subject " + bundle.subject_id + " sentence " + record->id.str() + " has " +
                      std::to_string(counts.size()) + " words; corpus has " + std::to_string(record->n_words()));
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i].size() != counts.size()) throw DataError("matrix not square in " + record->id.str());
      for (std::size_t j = 0; j <= i; ++j) out.vector.push_back(static_cast<double>(counts[i][j]));
    }
  }
  return out;
}

LayerDesign build_layer_design(const AttentionRun& run, std::size_t layer) {
  if (layer >= run.meta.n_layers) {
    throw UsageError("layer " + std::to_string(layer) + " out of range for " + run.meta.name);
  }
  std::vector<std::vector<double>> columns;
  std::vector<std::string> names;
  for (std::size_t h = 0; h < run.meta.n_heads; ++h) {
    columns.push_back(flattened_run(run, layer, h));
    names.push_back("layer" + std::to_string(layer) + "/head" + std::to_string(h));
  }
  LayerDesign out;
  out.model = run.meta.name;
  out.layer = layer;
  out.design = DesignMatrix::from_columns(columns, std::move(names));
  return out;
}

std::vector<double> layer_attention_vector(const AttentionRun& run, std::size_t layer) {
  if (layer >= run.meta.n_layers) throw UsageError("layer out of range");
  return flattened_run(run, layer, std::nullopt);
}

double intersubject_ceiling(const std::vector<SubjectVector>& subjects, std::vector<std::string>* warnings) {
  std::vector<const SubjectVector*> usable;
  for (const auto& s : subjects) {
    if (has_variance(s.vector)) {
      usable.push_back(&s);
    } else if (warnings != nullptr) {
      warnings->push_back("subject " + s.subject_id + " has a zero-variance vector; excluded");
    }
  }
  if (usable.size() < 2) throw DataError("inter-subject ceiling needs at least two usable subjects");
  const std::size_t length = usable.front()->vector.size();
  std::vector<double> group_mean(length, 0.0);
  for (const auto* s : usable) {
    if (s->vector.size() != length) throw DataError("subject vectors differ in length");
    for (std::size_t k = 0; k < length; ++k) group_mean[k] += s->vector[k];
  }
  for (double& v : group_mean) v /= static_cast<double>(usable.size());

  const DesignMatrix design = DesignMatrix::from_columns({group_mean}, {"group_mean"});
  double total = 0.0;
  for (const auto* s : usable) total += ols_fit(design, s->vector).r2;
  return total / static_cast<double>(usable.size());
}

ResemblanceScore model_resemblance(const AttentionRun& run, const std::vector<SubjectVector>& subjects,
                                   Group group, std::size_t jobs) {
  ResemblanceScore score;
  score.model = run.meta.name;
  score.group = group;

  std::vector<SubjectVector> members;
  for (const auto& s : subjects) {
    if (s.group != group) continue;
    if (!has_variance(s.vector)) {
      score.warnings.push_back("subject " + s.subject_id + " has a zero-variance vector; excluded");
      continue;
    }
    members.push_back(s);
  }
  if (members.empty()) throw DataError("empty group " + std::string(to_string(group)));
  std::sort(members.begin(), members.end(),
            [](const SubjectVector& a, const SubjectVector& b) { return a.subject_id < b.subject_id; });
  for (const auto& m : members) score.subject_ids.push_back(m.subject_id);

  const std::size_t n_layers = run.meta.n_layers;
  score.layer_mean_r2.assign(n_layers, 0.0);
  score.subject_r2.assign(n_layers, std::vector<double>(members.size(), 0.0));
  parallel_for(n_layers, jobs, [&](std::size_t layer) {
    const LayerDesign design = build_layer_design(run, layer);
    for (std::size_t s = 0; s < members.size(); ++s) {
      if (members[s].vector.size() != design.design.rows()) {
        throw DataError("subject " + members[s].subject_id + " vector has " +
                        std::to_string(members[s].vector.size()) + " entries; model design has " +
                        std::to_string(design.design.rows()) + " rows");
      }
      score.subject_r2[layer][s] = ols_fit(design.design, members[s].vector).r2;
    }
    double total = 0.0;
    for (double r2 : score.subject_r2[layer]) total += r2;
    score.layer_mean_r2[layer] = total / static_cast<double>(members.size());
  });

  for (std::size_t layer = 1; layer < n_layers; ++layer) {
    if (score.layer_mean_r2[layer] > score.layer_mean_r2[score.argmax_layer]) score.argmax_layer = layer;
  }
  score.r2_model = score.layer_mean_r2[score.argmax_layer];
  if (members.size() >= 2) {
    score.r2_inter = intersubject_ceiling(members);
    if (*score.r2_inter > 0.0) score.ratio_percent = 100.0 * score.r2_model / *score.r2_inter;
  } else {
    score.warnings.push_back("fewer than two subjects; no inter-subject ceiling");
  }
  return score;
}

TrivialPatterns build_trivial_patterns(std::size_t n_words) {
  if (n_words < 1) throw UsageError("trivial patterns need at least one word");
  TrivialPatterns p{Matrix(n_words, n_words), Matrix(n_words, n_words), Matrix(n_words, n_words)};
  for (std::size_t i = 0; i < n_words; ++i) {
    p.first_word(i, 0) = 1.0;
    if (i >= 1) p.prev_word(i, i - 1) = 1.0;
    p.self(i, i) = 1.0;
  }
  return p;
}

DesignMatrix trivial_design(const std::vector<std::size_t>& lengths) {
  std::vector<std::vector<double>> first, prev, self;
  for (std::size_t n : lengths) {
    const TrivialPatterns p = build_trivial_patterns(n);
    first.push_back(lower_tri_flatten(p.first_word));
    prev.push_back(lower_tri_flatten(p.prev_word));
    self.push_back(lower_tri_flatten(p.self));
  }
  return DesignMatrix::from_columns({concat_sentences(first), concat_sentences(prev), concat_sentences(self)},
                                    {"pattern:first_word", "pattern:prev_word", "pattern:self"});
}

FitResult trivial_reliance(const std::vector<double>& target, const std::vector<std::size_t>& lengths) {
  const DesignMatrix design = trivial_design(lengths);
  if (design.rows() != target.size()) {
    throw DataError("trivial reliance: target has " + std::to_string(target.size()) + " entries, patterns have " +
                    std::to_string(design.rows()));
  }
  return ols_fit(design, target);
}

FitResult trivial_reliance(const std::vector<double>& target, const Corpus& corpus) {
  return trivial_reliance(target, sentence_lengths(corpus));
}

std::vector<FitResult> model_trivial_reliance(const AttentionRun& run, std::size_t jobs) {
  std::vector<std::size_t> lengths;
  for (const auto& [id, sentence] : run.sentences) lengths.push_back(sentence.token_map.sentence_words());
  const DesignMatrix design = trivial_design(lengths);
  std::vector<FitResult> fits(run.meta.n_layers);
  parallel_for(run.meta.n_layers, jobs, [&](std::size_t layer) {
    fits[layer] = ols_fit(design, layer_attention_vector(run, layer));
  });
  return fits;
}

}  // namespace gaze_attn
