// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/pipeline/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "flowdub/errors.hpp"
#include "flowdub/flowmatch/flowmatch.hpp"
#include "flowdub/mof/mof.hpp"
#include "flowdub/numkit/rng.hpp"

namespace flowdub::pipeline {

using condnet::Condition;
using numkit::Array;
using numkit::GradMap;
using numkit::ParamStore;
using numkit::Rng;
using numkit::Tape;
using numkit::mix_seed;

namespace {

struct LossLogger {
  std::ofstream csv;
  std::vector<double> losses;

  LossLogger(const std::filesystem::path& path, bool append) {
    csv.open(path, append ? std::ios::app : std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot open loss log " + path.string());
    if (!append) csv << "step,lr,loss\n";
  }
  void log(uint32_t step, double lr, double loss) {
    char line[96];
    std::snprintf(line, sizeof(line), "%u,%.10g,%.10g\n", step, lr, loss);
    csv << line;
    losses.push_back(loss);
  }
};

double mean_head(const std::vector<double>& v, size_t n) {
  if (v.empty()) return 0.0;
  n = std::min(n, v.size());
  return std::accumulate(v.begin(), v.begin() + long(n), 0.0) / double(n);
}

double mean_tail(const std::vector<double>& v, size_t n) {
  if (v.empty()) return 0.0;
  n = std::min(n, v.size());
  return std::accumulate(v.end() - long(n), v.end(), 0.0) / double(n);
}

void require_stage(const ModelBundle& bundle, int needed) {
  if (!bundle.stage_done(needed)) {
    throw PreconditionError("missing stage-" + std::to_string(needed) + " checkpoint");
  }
}

// Field-net CFM training shared by stages 1, 2 and 4.
struct FieldTrainer {
  StageConfig cfg;
  ModelBundle* bundle;
  ParamStore* store;
  std::string prefix;
  std::vector<ClipFeatures> features;  // train split, index-aligned
  std::filesystem::path csv_path;
  std::ofstream drops_log;  // stage 4 only
  // Builds the per-sample condition; stage-specific.
  std::function<Condition(const ClipFeatures&, const DropMask&)> make_condition;

  TrainResult run(bool resume) {
    cfg.validate();
    condnet::FieldNetConfig net_cfg = bundle->field_config();
    numkit::Schedule sched = cfg.sched;
    sched.total_steps = std::max(cfg.updates, uint32_t(1));

    TrainResult result;
    result.stage = cfg.stage;
    const uint32_t start = resume ? uint32_t(store->step()) : 0;
    LossLogger logger(csv_path, resume && start > 0);

    for (uint32_t s = start + 1; s <= cfg.updates; ++s) {
      // Per-step RNG stream: resumed runs replay the exact same draws.
      Rng rng(mix_seed(cfg.seed, "stage" + std::to_string(cfg.stage) + "/step", s));
      std::vector<size_t> ids(cfg.batch_size);
      for (auto& id : ids) id = size_t(rng.below(features.size()));
      std::vector<DropMask> masks(cfg.batch_size);
      for (uint32_t i = 0; i < cfg.batch_size; ++i) {
        masks[i] = draw_drop_mask(rng, cfg.drop_probability);
        if (drops_log.is_open()) {
          std::vector<std::string> dropped;
          if (masks[i].mof_feature) dropped.emplace_back("mof_feature");
          if (masks[i].transcript) dropped.emplace_back("transcript");
          if (masks[i].prompt) dropped.emplace_back("prompt");
          nlohmann::ordered_json j = {{"step", s}, {"sample", i}, {"dropped", dropped}};
          drops_log << j.dump() << "\n";
        }
      }

      try {
        Tape tape;
        condnet::Binder bind = condnet::param_binder(*store);
        for (const auto& name : store->names()) bind(tape, name);  // complete gradient set

        std::vector<Array> x1;
        std::vector<Condition> conds;
        x1.reserve(ids.size());
        for (uint32_t i = 0; i < cfg.batch_size; ++i) {
          const ClipFeatures& f = features[ids[i]];
          x1.push_back(f.latent);
          conds.push_back(make_condition(f, masks[i]));
        }
        auto field = [&](Tape& t, Tape::Ref x_t, double tt, size_t index) {
          return condnet::field_forward(t, bind, net_cfg, prefix, x_t, tt, conds[index]);
        };
        Tape::Ref loss = flowmatch::cfm_loss(tape, field, x1, rng);
        const double loss_value = double(tape.value(loss)[0]);

        GradMap grads = tape.backward(loss);
        numkit::clip_global_norm(grads, sched.clip_norm);
        numkit::adam_step(*store, grads, numkit::lr_at_step(sched, s), cfg.adam);
        logger.log(s, numkit::lr_at_step(sched, s), loss_value);
      } catch (const std::runtime_error& e) {
        throw TrainingDiverged(s, e.what());
      }
      ++result.steps_run;
    }

    result.initial_loss = mean_head(logger.losses, 50);
    result.final_loss = mean_tail(logger.losses, 50);
    result.loss_curve = std::move(logger.losses);
    return result;
  }
};

}  // namespace

DropMask draw_drop_mask(Rng& rng, double p) {
  DropMask m;
  m.mof_feature = rng.uniform() < p;
  m.transcript = rng.uniform() < p;
  m.prompt = rng.uniform() < p;
  return m;
}

ClipFeatures load_clip_features(const condnet::EncoderSet& enc,
                                const std::filesystem::path& corpus_dir,
                                const synthdata::Manifest& manifest,
                                const synthdata::ManifestEntry& entry) {
  ClipFeatures f;
  const dsp::Waveform wav = dsp::read_wav(corpus_dir / entry.wav_path);
  const dsp::MelSpec mel = dsp::mel_spectrogram(wav);
  f.frames = mel.frame_count();
  f.latent = mel_to_latent(mel.frames);
  const Array track = synthdata::load_video_track(corpus_dir / entry.track_path);
  f.video_emb = condnet::encode_video(enc, track, f.frames);
  f.text_emb = condnet::encode_text(enc, entry.transcript, f.frames);
  const dsp::Waveform ref =
      dsp::read_wav(corpus_dir / manifest.speaker_refs[size_t(entry.speaker)]);
  f.prompt_emb = condnet::encode_prompt(enc, ref);
  f.energy = dsp::energy_contour(wav, dsp::kWin, dsp::kHop).values;
  return f;
}

TrainResult train_stage(const StageConfig& cfg, const std::filesystem::path& manifest_path,
                        const std::filesystem::path& out_dir, bool resume) {
  cfg.validate();
  const std::filesystem::path corpus_dir = manifest_path.parent_path();
  const synthdata::Manifest manifest = synthdata::load_manifest(manifest_path);

  ModelBundle bundle;
  if (std::filesystem::exists(out_dir / ModelBundle::kMetaFile)) {
    bundle = ModelBundle::load(out_dir);
  } else {
    if (cfg.stage != 1) {
      throw PreconditionError("missing stage-1 checkpoint");
    }
    bundle = ModelBundle::create(out_dir, cfg.seed);
  }

  switch (cfg.stage) {
    case 2:
      require_stage(bundle, 1);
      break;
    case 3:
      require_stage(bundle, 1);
      break;
    case 4:
      require_stage(bundle, 1);
      require_stage(bundle, 2);
      require_stage(bundle, 3);
      break;
    default:
      break;
  }

  auto load_train_features = [&]() {
    std::vector<ClipFeatures> features;
    for (const auto* e : manifest.split_entries("train")) {
      features.push_back(load_clip_features(bundle.encoders, corpus_dir, manifest, *e));
    }
    if (features.empty()) throw PreconditionError("manifest has no train split");
    return features;
  };

  TrainResult result;
  switch (cfg.stage) {
    case 1: {
      if (resume && bundle.v2a) {
        // keep state
      } else {
        bundle.v2a = condnet::init_field_net(mix_seed(bundle.seed, "init/v2a"),
                                             bundle.field_config(), "v2a");
      }
      FieldTrainer trainer{cfg,
                           &bundle,
                           &*bundle.v2a,
                           "v2a",
                           load_train_features(),
                           out_dir / "stage1_loss.csv",
                           {},
                           {}};
      trainer.make_condition = [](const ClipFeatures& f, const DropMask&) {
        Condition c;
        c.frames = f.frames;
        c.video_emb = f.video_emb;
        return c;
      };
      result = trainer.run(resume);
      break;
    }
    case 2: {
      if (resume && bundle.tts) {
        // keep state
      } else {
        bundle.tts = condnet::init_field_net(mix_seed(bundle.seed, "init/tts"),
                                             bundle.field_config(), "tts");
      }
      FieldTrainer trainer{cfg,
                           &bundle,
                           &*bundle.tts,
                           "tts",
                           load_train_features(),
                           out_dir / "stage2_loss.csv",
                           {},
                           {}};
      trainer.make_condition = [](const ClipFeatures& f, const DropMask&) {
        Condition c;
        c.frames = f.frames;
        c.text_emb = f.text_emb;
        c.prompt_emb = f.prompt_emb;
        return c;
      };
      result = trainer.run(resume);
      break;
    }
    case 3: {
      result = [&] {
        const auto train_set =
            synthdata::load_instructions(corpus_dir / manifest.instructions_train);
        const auto heldout_set =
            synthdata::load_instructions(corpus_dir / manifest.instructions_heldout);
        if (train_set.empty()) throw PreconditionError("empty instruction training set");

        if (!(resume && bundle.mof_gate)) {
          bundle.mof_gate = mof::init_gate(mix_seed(bundle.seed, "init/mof"));
        }
        ParamStore& store = *bundle.mof_gate;
        numkit::Schedule sched = cfg.sched;
        sched.total_steps = std::max(cfg.updates, uint32_t(1));

        std::vector<Array> embs;
        std::vector<int> labels;
        for (const auto& li : train_set) {
          embs.push_back(condnet::encode_instruction(bundle.encoders, li.text));
          labels.push_back(li.label);
        }

        TrainResult r;
        r.stage = 3;
        const uint32_t start = resume ? uint32_t(store.step()) : 0;
        LossLogger logger(out_dir / "stage3_loss.csv", resume && start > 0);
        const uint32_t dim = condnet::kInstrDim;

        for (uint32_t s = start + 1; s <= cfg.updates; ++s) {
          Rng rng(mix_seed(cfg.seed, "stage3/step", s));
          Array batch = Array::zeros({cfg.batch_size, dim});
          Array onehot = Array::zeros({cfg.batch_size, uint32_t(mof::kNumTasks)});
          for (uint32_t i = 0; i < cfg.batch_size; ++i) {
            const auto pick = size_t(rng.below(embs.size()));
            for (uint32_t d = 0; d < dim; ++d) {
              batch.data()[size_t(i) * dim + d] = embs[pick][d];
            }
            onehot.data()[size_t(i) * 3 + size_t(labels[pick])] = 1.0f;
          }
          try {
            Tape tape;
            condnet::Binder bind = condnet::param_binder(store);
            for (const auto& name : store.names()) bind(tape, name);
            Tape::Ref logits = mof::gate_logits(tape, bind, tape.input(batch));
            Tape::Ref logp = tape.log_(tape.softmax(logits));
            // CE = -(1/N) sum y log p = -K * mean(y . log p)
            Tape::Ref loss = tape.mul(tape.reduce_mean(tape.mul(logp, tape.input(onehot))),
                                      tape.input(Array({1}, {-float(mof::kNumTasks)})));
            const double loss_value = double(tape.value(loss)[0]);
            GradMap grads = tape.backward(loss);
            numkit::clip_global_norm(grads, sched.clip_norm);
            numkit::adam_step(store, grads, numkit::lr_at_step(sched, s), cfg.adam);
            logger.log(s, numkit::lr_at_step(sched, s), loss_value);
          } catch (const std::runtime_error& e) {
            throw TrainingDiverged(s, e.what());
          }
          ++r.steps_run;
        }

        size_t correct = 0;
        for (const auto& li : heldout_set) {
          const Array emb = condnet::encode_instruction(bundle.encoders, li.text);
          const mof::GateDecision d = mof::gate_probs(store, emb);
          if (int(d.route) == li.label) ++correct;
        }
        r.heldout_accuracy = heldout_set.empty() ? -1.0 : double(correct) / double(heldout_set.size());
        r.initial_loss = mean_head(logger.losses, 50);
        r.final_loss = mean_tail(logger.losses, 50);
        r.loss_curve = std::move(logger.losses);
        return r;
      }();
      break;
    }
    case 4: {
      // V2A stays frozen: stage 4 never touches v2a.fdck. The TTS net is
      // finetuned in place with a fresh optimizer state.
      const bool continuing = resume && bundle.stages.count(4) != 0;
      if (!continuing) {
        ParamStore fresh;
        for (const auto& name : bundle.tts->names()) {
          fresh.insert(name, bundle.tts->value(name));
        }
        bundle.tts = std::move(fresh);
      }
      FieldTrainer trainer{cfg,
                           &bundle,
                           &*bundle.tts,
                           "tts",
                           load_train_features(),
                           out_dir / "stage4_loss.csv",
                           {},
                           {}};
      trainer.drops_log.open(out_dir / "stage4_drops.jsonl",
                             continuing ? std::ios::app : std::ios::trunc);
      trainer.make_condition = [](const ClipFeatures& f, const DropMask& m) {
        Condition c;
        c.frames = f.frames;
        if (!m.transcript) c.text_emb = f.text_emb;
        if (!m.prompt) c.prompt_emb = f.prompt_emb;
        // Teacher forcing: ground-truth contour stands in for the MoF
        // feature during training; inference uses the V2A prediction.
        if (!m.mof_feature) c.energy = f.energy;
        return c;
      };
      result = trainer.run(continuing);
      break;
    }
    default:
      throw std::invalid_argument("train_stage: bad stage");
  }

  bundle.save_module(cfg.stage);
  ModelBundle::StageRecord rec;
  rec.completed = true;
  rec.updates = cfg.updates;
  rec.config_hash = config_hash(cfg);
  bundle.stages[cfg.stage] = rec;
  bundle.save_meta();

  result.checkpoint = out_dir;
  return result;
}

}  // namespace flowdub::pipeline
