#pragma once

#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "matepred/contact_map.hpp"
#include "matepred/dataset.hpp"
#include "matepred/model.hpp"
#include "matepred/physchem.hpp"
#include "matepred/store.hpp"

namespace matepred {

/// Per-sequence model inputs, computed once and reused across epochs.
struct SequenceFeatures {
    std::vector<std::size_t> ids;  // context token ids
    std::vector<Real> mask;        // context
    std::vector<Real> text;        // context x d_model, empty in trained-embedding mode
    std::vector<Real> pcf;         // 88 raw features
    std::vector<Real> cmap;        // flattened canvas
};

/// Optional precomputed inputs. Stores are keyed by the full sequence string.
struct FeatureSources {
    std::shared_ptr<const EmbeddingStore> text;
    std::shared_ptr<const EmbeddingStore> cmaps;
};

class FeatureCache {
public:
    FeatureCache(ModelConfig config, FeatureSources sources)
        : config_(std::move(config)), sources_(std::move(sources)) {}

    const ModelConfig& config() const noexcept { return config_; }

    const SequenceFeatures& get(const AaSequence& seq) {
        auto it = cache_.find(seq.str());
        if (it == cache_.end()) it = cache_.emplace(seq.str(), build(seq)).first;
        return it->second;
    }

    /// Computes everything up front so missing inputs fail before training.
    void warm(const std::vector<PairExample>& examples) {
        for (const auto& e : examples) {
            get(e.tcr);
            get(e.epitope);
        }
    }

    LigandBatch batch(std::span<const AaSequence* const> seqs) {
        const std::size_t b = seqs.size(), l = config_.context, d = config_.d_model;
        LigandBatch out;
        out.batch = b;
        out.mask = Tensor({b, l});
        const bool trained = config_.embedding_mode == EmbeddingMode::TrainedFromScratch;
        if (trained) out.token_ids.reserve(b * l);
        else out.tokens = Tensor({b, l, d});
        if (config_.use_pcf) out.pcf = Tensor({b, config_.pcf_dims()});
        if (config_.use_cmap) out.cmap = Tensor({b, config_.cmap_dims()});
        for (std::size_t s = 0; s < b; ++s) {
            const auto& f = get(*seqs[s]);
            std::copy(f.mask.begin(), f.mask.end(), out.mask.data().begin() + static_cast<std::ptrdiff_t>(s * l));
            if (trained) out.token_ids.insert(out.token_ids.end(), f.ids.begin(), f.ids.end());
            else std::copy(f.text.begin(), f.text.end(), out.tokens.data().begin() + static_cast<std::ptrdiff_t>(s * l * d));
            if (config_.use_pcf)
                std::copy(f.pcf.begin(), f.pcf.end(), out.pcf.data().begin() + static_cast<std::ptrdiff_t>(s * f.pcf.size()));
            if (config_.use_cmap)
                std::copy(f.cmap.begin(), f.cmap.end(),
                          out.cmap.data().begin() + static_cast<std::ptrdiff_t>(s * f.cmap.size()));
        }
        return out;
    }

private:
    SequenceFeatures build(const AaSequence& seq) const {
        const std::size_t l = config_.context, d = config_.d_model;
        const auto shaped = shape_sequence(seq, l);
        SequenceFeatures f;
        f.ids.assign(shaped.tokens.begin(), shaped.tokens.end());
        f.mask.assign(shaped.mask.begin(), shaped.mask.end());

        switch (config_.embedding_mode) {
        case EmbeddingMode::Mock: {
            const auto m = mock_embed(shaped, d, config_.mock_seed);
            f.text.assign(m.data.begin(), m.data.end());
            break;
        }
        case EmbeddingMode::PretrainedStore: {
            const StoreRecord* r = sources_.text ? sources_.text->find(seq.str()) : nullptr;
            if (!r) throw MissingEmbedding("no text embedding for " + seq.str());
            if (r->cols != d)
                throw ShapeMismatch("embedding for " + seq.str() + " has " + std::to_string(r->cols) +
                                    " columns, model expects " + std::to_string(d));
            // Rows beyond the context are dropped; short records are zero-padded.
            f.text.assign(l * d, Real(0));
            const std::size_t rows = std::min<std::size_t>(r->rows, l);
            for (std::size_t i = 0; i < rows * d; ++i) f.text[i] = static_cast<Real>(r->data[i]);
            break;
        }
        case EmbeddingMode::TrainedFromScratch:
            break;
        }

        if (config_.use_pcf) {
            const auto v = physchem::featurize(seq).combined();
            f.pcf.assign(v.begin(), v.end());
        }
        if (config_.use_cmap) {
            FlatContactVector flat;
            if (sources_.cmaps) {
                const StoreRecord* r = sources_.cmaps->find(seq.str());
                if (!r) throw MissingEmbedding("no contact map for " + seq.str());
                flat = pad_and_flatten(load_contact_map(*r), l);
            } else if (config_.embedding_mode == EmbeddingMode::Mock) {
                flat = pad_and_flatten(mock_contact_map(seq, config_.mock_seed), l);
            } else {
                throw MissingEmbedding("no contact-map store for " + seq.str());
            }
            f.cmap.assign(flat.values.begin(), flat.values.end());
        }
        return f;
    }

    ModelConfig config_;
    FeatureSources sources_;
    std::unordered_map<std::string, SequenceFeatures> cache_;
};

/// Model-ready inputs for a set of pairs.
struct PairBatch {
    LigandBatch tcr;
    LigandBatch epitope;
    std::vector<Real> labels;
};

inline PairBatch make_batch(FeatureCache& cache, const std::vector<PairExample>& examples,
                            std::span<const std::size_t> indices) {
    std::vector<const AaSequence*> tcrs, epis;
    PairBatch out;
    for (std::size_t i : indices) {
        tcrs.push_back(&examples[i].tcr);
        epis.push_back(&examples[i].epitope);
        out.labels.push_back(static_cast<Real>(examples[i].label));
    }
    out.tcr = cache.batch(tcrs);
    out.epitope = cache.batch(epis);
    return out;
}

} // namespace matepred
