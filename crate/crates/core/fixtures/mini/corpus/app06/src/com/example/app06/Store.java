package com.example.app06;

public class Store {
    private String name = "item 106";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 106);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
