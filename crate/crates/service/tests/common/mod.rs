#![allow(dead_code)]

use std::path::Path;

use messplus_service::ServiceConfig;

pub fn config(data_dir: &Path, segment_records: u64) -> ServiceConfig {
    let text = format!(
        r#"
data_dir = "{}"
segment_records = {segment_records}

[[tenants]]
id = "live"
seed = 11
sla = {{ alpha = 0.7, v = 0.001, c = 0.1 }}
extractor = {{ kind = "passthrough", dim = 3 }}
models = [
  {{ name = "small", base_cost = 120000.0 }},
  {{ name = "medium", base_cost = 540000.0 }},
  {{ name = "large", base_cost = 2910000.0 }},
]

[[tenants]]
id = "shadow"
seed = 5
shadow_exploration = true
sla = {{ alpha = 0.7, v = 0.001, c = 0.5 }}
extractor = {{ kind = "hashed_tokens", dim = 16, seed = 3 }}
models = [
  {{ name = "small", base_cost = 120000.0 }},
  {{ name = "large", base_cost = 2910000.0, cost_per_token = 2.0 }},
]

[[tenants]]
id = "replay"
seed = 2
mode = "trace"
sla = {{ alpha = 0.6, v = 0.001, c = 0.2 }}
extractor = {{ kind = "passthrough", dim = 2 }}
models = [
  {{ name = "small", base_cost = 120000.0 }},
  {{ name = "large", base_cost = 2910000.0 }},
]
"#,
        data_dir.display()
    );
    ServiceConfig::from_toml(&text).unwrap()
}
