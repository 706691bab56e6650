use criterion::{black_box, criterion_group, criterion_main, Criterion};
use qrind_bench::{dense_model, machine_check, problem_inputs, MACHINE_CHECK};
use qrind_core::{assemble, disassemble, parse_ir, run_to_completion, Activation, EcLevel, QrParams};

fn codec(c: &mut Criterion) {
    let program = machine_check();
    let bytes = assemble(&program).unwrap();
    c.bench_function("parse_ir", |b| b.iter(|| parse_ir(black_box(MACHINE_CHECK)).unwrap()));
    c.bench_function("assemble", |b| b.iter(|| assemble(black_box(&program)).unwrap()));
    c.bench_function("disassemble", |b| b.iter(|| disassemble(black_box(&bytes)).unwrap()));
}

fn vm(c: &mut Criterion) {
    let program = machine_check();
    let inputs = problem_inputs();
    c.bench_function("vm_machine_check", |b| {
        b.iter(|| run_to_completion(black_box(&program), &inputs, 10_000).unwrap())
    });
}

fn mlp(c: &mut Criterion) {
    let model = dense_model(&[20, 25, 1], Activation::Relu);
    let x: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
    c.bench_function("model_forward_20_25_1", |b| b.iter(|| model.forward(black_box(&x)).unwrap()));
}

fn qr(c: &mut Criterion) {
    let bytes = assemble(&machine_check()).unwrap();
    let params = QrParams { ec_level: EcLevel::Medium, ..QrParams::default() };
    let png = qrind_core::emit_qr(bytes.as_bytes(), &params).unwrap();
    c.bench_function("emit_qr_png", |b| b.iter(|| qrind_core::emit_qr(black_box(bytes.as_bytes()), &params).unwrap()));
    c.bench_function("extract_payload", |b| b.iter(|| qrind_core::extract_payload(black_box(&png)).unwrap()));
}

criterion_group!(benches, codec, vm, mlp, qr);
criterion_main!(benches);
