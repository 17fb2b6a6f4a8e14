#include <cstdint>
#include <string>
#include <vector>

#include "gsc/bytes.hpp"
#include "gsc/errors.hpp"
#include "gsc/model.hpp"

namespace gsc {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'C', '1'};

enum RecordKind : uint8_t {
  kRecConv = 0,
  kRecTransposedConv = 1,
  kRecActivation = 2,
  kRecFactorized = 3,
  kRecMeta = 4,
  kRecTopology = 5,
};

void put_tensor_values(std::vector<uint8_t>& out, const Tensor& t) {
  for (int64_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
}

void read_tensor_values(ByteReader& r, Tensor& t) {
  for (int64_t i = 0; i < t.size(); ++i) t[i] = r.f64();
}

void put_layer(std::vector<uint8_t>& out, const LayerParams& layer) {
  if (layer.kind == LayerKind::kActivation) {
    put_u8(out, kRecActivation);
    put_f64(out, layer.slope);
    return;
  }
  put_u8(out, layer.kind == LayerKind::kConv ? kRecConv : kRecTransposedConv);
  put_u32(out, static_cast<uint32_t>(layer.in_channels));
  put_u32(out, static_cast<uint32_t>(layer.out_channels));
  put_u32(out, static_cast<uint32_t>(layer.kernel));
  put_u32(out, static_cast<uint32_t>(layer.stride));
  put_u32(out, static_cast<uint32_t>(layer.padding));
  put_tensor_values(out, layer.weights);
  put_tensor_values(out, layer.bias);
}

LayerParams read_layer(ByteReader& r, uint8_t kind) {
  if (kind == kRecActivation) return LayerParams::activation(r.f64());
  const int in = static_cast<int>(r.u32());
  const int out = static_cast<int>(r.u32());
  const int k = static_cast<int>(r.u32());
  const int s = static_cast<int>(r.u32());
  const int p = static_cast<int>(r.u32());
  if (in <= 0 || out <= 0 || k <= 0 || s <= 0 || p < 0 || in > 4096 || out > 4096 || k > 64) {
    throw FormatError("checkpoint: implausible layer geometry");
  }
  LayerParams layer = (kind == kRecConv) ? LayerParams::conv(in, out, k, s, p)
                                         : LayerParams::transposed_conv(in, out, k, s, p);
  read_tensor_values(r, layer.weights);
  read_tensor_values(r, layer.bias);
  return layer;
}

}  // namespace

void save_model(const std::string& path, const CodecModel& model) {
  model.validate();
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);

  const uint32_t records = 1 /*topology*/ +
                           static_cast<uint32_t>(model.analysis.size() + model.synthesis.size() +
                                                 model.hyper_analysis.size() +
                                                 model.hyper_synthesis.size()) +
                           1 /*factorized*/ + 1 /*meta*/;
  put_u32(out, records);

  put_u8(out, kRecTopology);
  put_u32(out, static_cast<uint32_t>(model.analysis.size()));
  put_u32(out, static_cast<uint32_t>(model.synthesis.size()));
  put_u32(out, static_cast<uint32_t>(model.hyper_analysis.size()));
  put_u32(out, static_cast<uint32_t>(model.hyper_synthesis.size()));

  for (const auto* stack :
       {&model.analysis, &model.synthesis, &model.hyper_analysis, &model.hyper_synthesis}) {
    for (const auto& layer : *stack) put_layer(out, layer);
  }

  put_u8(out, kRecFactorized);
  put_u32(out, static_cast<uint32_t>(model.side_prior.channels()));
  put_tensor_values(out, model.side_prior.loc);
  put_tensor_values(out, model.side_prior.log_scale);

  put_u8(out, kRecMeta);
  put_f64(out, model.lambda);
  put_u8(out, static_cast<uint8_t>(model.lambda_index));

  write_file_bytes(path, out);
}

CodecModel load_model(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  ByteReader r(bytes);
  for (char c : kMagic) {
    if (r.u8() != static_cast<uint8_t>(c)) throw FormatError("checkpoint: bad magic");
  }
  const uint32_t records = r.u32();
  if (records < 3 || records > 4096) throw FormatError("checkpoint: implausible record count");
  if (r.u8() != kRecTopology) throw FormatError("checkpoint: missing topology record");
  const uint32_t na = r.u32(), ns = r.u32(), nha = r.u32(), nhs = r.u32();
  if (na + ns + nha + nhs + 3 != records || na == 0 || ns == 0 || nha == 0 || nhs == 0) {
    throw FormatError("checkpoint: topology does not match record count");
  }

  CodecModel m;
  bool saw_factorized = false, saw_meta = false;
  auto read_stack = [&](std::vector<LayerParams>& stack, uint32_t n) {
    stack.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
      const uint8_t kind = r.u8();
      if (kind != kRecConv && kind != kRecTransposedConv && kind != kRecActivation) {
        throw FormatError("checkpoint: unexpected record kind in layer stack");
      }
      stack.push_back(read_layer(r, kind));
    }
  };
  read_stack(m.analysis, na);
  read_stack(m.synthesis, ns);
  read_stack(m.hyper_analysis, nha);
  read_stack(m.hyper_synthesis, nhs);

  for (int rec = 0; rec < 2; ++rec) {
    const uint8_t kind = r.u8();
    if (kind == kRecFactorized) {
      if (saw_factorized) throw FormatError("checkpoint: duplicate prior record");
      const uint32_t channels = r.u32();
      if (channels == 0 || channels > 4096) throw FormatError("checkpoint: bad prior channels");
      m.side_prior = FactorizedModel(static_cast<int>(channels));
      read_tensor_values(r, m.side_prior.loc);
      read_tensor_values(r, m.side_prior.log_scale);
      saw_factorized = true;
    } else if (kind == kRecMeta) {
      if (saw_meta) throw FormatError("checkpoint: duplicate meta record");
      m.lambda = r.f64();
      m.lambda_index = static_cast<int>(r.u8());
      saw_meta = true;
    } else {
      throw FormatError("checkpoint: unexpected trailing record kind");
    }
  }
  if (!saw_factorized || !saw_meta) throw FormatError("checkpoint: missing records");
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");

  for (const auto* stack :
       {&m.analysis, &m.synthesis, &m.hyper_analysis, &m.hyper_synthesis}) {
    for (const auto& layer : *stack) {
      if (layer.has_params() && (!layer.weights.all_finite() || !layer.bias.all_finite())) {
        throw FormatError("checkpoint: non-finite parameter values");
      }
    }
  }
  if (!m.side_prior.loc.all_finite() || !m.side_prior.log_scale.all_finite()) {
    throw FormatError("checkpoint: non-finite prior values");
  }
  if (!std::isfinite(m.lambda)) throw FormatError("checkpoint: non-finite lambda");
  try {
    m.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint: inconsistent model: ") + e.what());
  }
  return m;
}

}  // namespace gsc
